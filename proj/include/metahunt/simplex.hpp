#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "metahunt/errors.hpp"
#include "metahunt/linalg.hpp"

namespace metahunt {

/// Exact Euclidean projection onto the probability simplex (sort-based).
inline std::vector<double> project_to_simplex(std::vector<double> v) {
    const std::size_t n = v.size();
    if (n == 0) throw ArgumentError("project_to_simplex: empty vector");
    std::vector<double> u(v);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, tau = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        css += u[j];
        const double t = (css - 1.0) / double(j + 1);
        if (u[j] - t > 0.0) tau = t;
    }
    for (auto& x : v) x = std::max(x - tau, 0.0);
    return v;
}

struct SimplexQpResult {
    std::vector<double> w;
    int iterations = 0;
    bool converged = false;
};

/// min_w  w' Gram w - 2 b' w  over the probability simplex, by accelerated
/// projected gradient with step 1/L, L = largest Gram eigenvalue.
inline SimplexQpResult simplex_qp(const Matrix& gram, const std::vector<double>& b,
                                  double tol = 1e-10, int max_iter = 10000) {
    const std::size_t k = b.size();
    if (gram.rows != k || gram.cols != k) throw ArgumentError("simplex_qp: dimension mismatch");
    SimplexQpResult out;
    if (k == 1) {
        out.w = {1.0};
        out.converged = true;
        return out;
    }

    double lmax = jacobi_eigen(gram).values.front();
    if (!(lmax > 0.0)) {
        // Gram ~ 0: objective is affine in w up to rounding; any feasible
        // point works, pick the largest-b vertex
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (b[j] > b[best]) best = j;
        out.w.assign(k, 0.0);
        out.w[best] = 1.0;
        out.converged = true;
        return out;
    }

    const double step = 1.0 / lmax;
    std::vector<double> w(k, 1.0 / double(k));
    std::vector<double> y = w;
    double t = 1.0;

    auto grad_at = [&](const std::vector<double>& p) {
        std::vector<double> g = mat_vec(gram, p);
        for (std::size_t j = 0; j < k; ++j) g[j] -= b[j];
        return g; // (Gram p - b); the true gradient is twice this
    };
    auto objective = [&](const std::vector<double>& p) {
        const std::vector<double> gp = mat_vec(gram, p);
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += p[j] * gp[j] - 2.0 * b[j] * p[j];
        return s;
    };

    double f_prev = objective(w);
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> g = grad_at(y);
        std::vector<double> cand(k);
        for (std::size_t j = 0; j < k; ++j) cand[j] = y[j] - step * g[j];
        std::vector<double> w_new = project_to_simplex(std::move(cand));

        // adaptive restart keeps the momentum from overshooting
        const double f_new = objective(w_new);
        if (f_new > f_prev) {
            y = w;
            t = 1.0;
            std::vector<double> g2 = grad_at(y);
            for (std::size_t j = 0; j < k; ++j) w_new[j] = y[j] - step * g2[j];
            w_new = project_to_simplex(std::move(w_new));
        }

        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t j = 0; j < k; ++j)
            y[j] = w_new[j] + ((t - 1.0) / t_new) * (w_new[j] - w[j]);
        w = w_new;
        t = t_new;
        f_prev = std::min(f_prev, f_new);
        out.iterations = it + 1;

        // projected-gradient residual at w
        std::vector<double> gw = grad_at(w);
        std::vector<double> pg(k);
        for (std::size_t j = 0; j < k; ++j) pg[j] = w[j] - step * gw[j];
        pg = project_to_simplex(std::move(pg));
        double res = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double d = (w[j] - pg[j]) * lmax;
            res += d * d;
        }
        if (std::sqrt(res) <= tol) {
            out.converged = true;
            break;
        }
    }
    out.w = std::move(w);
    return out;
}

} // namespace metahunt
