#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "metahunt/errors.hpp"

namespace metahunt {

/// Small dense row-major matrix. Everything in this library is K x K or
/// m x p with K, p <= ~10, so no effort is spent on cache blocking.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data) s += v * v;
        return std::sqrt(s);
    }
};

inline std::vector<double> mat_vec(const Matrix& a, const std::vector<double>& x) {
    if (x.size() != a.cols) throw ArgumentError("mat_vec: dimension mismatch");
    std::vector<double> y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ArgumentError("mat_mul: dimension mismatch");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

/// Solve A x = b for symmetric positive (semi)definite A by Cholesky.
/// Adds escalating diagonal jitter if the factorization stalls; the
/// callers pass Gram matrices that are PSD up to rounding.
inline std::vector<double> solve_spd(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows;
    if (a.cols != n || b.size() != n) throw ArgumentError("solve_spd: dimension mismatch");
    if (n == 0) return {};

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a(i, i)));
    if (scale == 0.0) scale = 1.0;

    double jitter = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Matrix l = a;
        if (jitter > 0.0)
            for (std::size_t i = 0; i < n; ++i) l(i, i) += jitter;
        bool ok = true;
        for (std::size_t j = 0; j < n && ok; ++j) {
            double d = l(j, j);
            for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
            if (!(d > scale * 1e-300)) {
                ok = false;
                break;
            }
            d = std::sqrt(d);
            l(j, j) = d;
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = l(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
                l(i, j) = s / d;
            }
        }
        if (!ok) {
            jitter = (jitter == 0.0) ? scale * 1e-14 : jitter * 100.0;
            continue;
        }
        // forward then backward substitution
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
            y[i] = s / l(i, i);
        }
        std::vector<double> x(n);
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
            x[ii] = s / l(ii, ii);
        }
        return x;
    }
    throw FitError("solve_spd: matrix is not positive definite even after regularization");
}

struct EigenDecomposition {
    std::vector<double> values; // descending
    Matrix vectors;             // column j pairs with values[j]
};

/// Cyclic Jacobi rotations for small symmetric matrices. Sweeps until the
/// off-diagonal Frobenius norm falls below 1e-12 relative to the matrix
/// scale (hard cap of 64 sweeps).
inline EigenDecomposition jacobi_eigen(Matrix a) {
    const std::size_t n = a.rows;
    if (a.cols != n) throw ArgumentError("jacobi_eigen: matrix must be square");
    Matrix v = Matrix::identity(n);
    const double tol = 1e-12 * std::max(1.0, a.frobenius_norm());

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 64 && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) <= tol / (10.0 * double(n))) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

} // namespace metahunt
