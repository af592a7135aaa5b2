#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "metahunt/errors.hpp"
#include "metahunt/linalg.hpp"

namespace metahunt {

namespace detail {

inline std::uint64_t fnv1a(const void* bytes, std::size_t n, std::uint64_t h = 14695981039346656037ull) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace detail

/// Discretization of the covariate measure mu. All empirical L^2(mu)
/// computations run over these points; the weights sum to 1.
class EvalGrid {
public:
    EvalGrid(std::vector<double> points, std::vector<double> weights)
        : points_(std::move(points)), weights_(std::move(weights)) {
        if (points_.size() < 2) throw ArgumentError("EvalGrid: need at least 2 points");
        if (weights_.size() != points_.size())
            throw ArgumentError("EvalGrid: points/weights size mismatch");
        if (!detail::all_finite(points_)) throw ArgumentError("EvalGrid: non-finite point");
        // compensated sum so the 1e-12 check does not drift with G
        double sum = 0.0, comp = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0)) throw ArgumentError("EvalGrid: negative or non-finite weight");
            const double y = w - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        if (std::fabs(sum - 1.0) > 1e-12)
            throw ArgumentError("EvalGrid: weights sum to " + std::to_string(sum) + ", expected 1");
        hash_ = detail::fnv1a(points_.data(), points_.size() * sizeof(double));
        hash_ = detail::fnv1a(weights_.data(), weights_.size() * sizeof(double), hash_);
    }

    /// Uniform weights 1/G; the Monte Carlo grids of the simulator.
    static EvalGrid uniform(std::vector<double> points) {
        std::vector<double> w(points.size(), points.empty() ? 0.0 : 1.0 / double(points.size()));
        return EvalGrid(std::move(points), std::move(w));
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    std::uint64_t hash() const { return hash_; }

private:
    std::vector<double> points_;
    std::vector<double> weights_;
    std::uint64_t hash_ = 0;
};

/// A function represented by its values on an EvalGrid. Carries the grid
/// hash so misaligned mixes are caught instead of silently summed.
struct FuncSample {
    std::vector<double> values;
    std::uint64_t grid_hash = 0;

    FuncSample() = default;

    FuncSample(const EvalGrid& grid, std::vector<double> vals)
        : values(std::move(vals)), grid_hash(grid.hash()) {
        if (values.size() != grid.size())
            throw ArgumentError("FuncSample: values length does not match grid");
        if (!detail::all_finite(values)) throw ArgumentError("FuncSample: non-finite value");
    }

    struct unchecked_t {};
    FuncSample(unchecked_t, std::uint64_t hash, std::vector<double> vals)
        : values(std::move(vals)), grid_hash(hash) {}

    std::size_t size() const { return values.size(); }
};

inline void check_aligned(const FuncSample& f, const EvalGrid& grid, const char* where) {
    if (f.grid_hash != grid.hash() || f.values.size() != grid.size())
        throw AlignmentError(std::string(where) + ": FuncSample not aligned to grid");
}

/// <f, g> = sum_j w_j f(x_j) g(x_j)
inline double inner_product(const FuncSample& f, const FuncSample& g, const EvalGrid& grid) {
    check_aligned(f, grid, "inner_product");
    check_aligned(g, grid, "inner_product");
    const auto& w = grid.weights();
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * f.values[j] * g.values[j];
    return s;
}

inline double l2_norm(const FuncSample& f, const EvalGrid& grid) {
    check_aligned(f, grid, "l2_norm");
    const auto& w = grid.weights();
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * f.values[j] * f.values[j];
    return std::sqrt(s);
}

inline double l2_dist(const FuncSample& f, const FuncSample& g, const EvalGrid& grid) {
    check_aligned(f, grid, "l2_dist");
    check_aligned(g, grid, "l2_dist");
    const auto& w = grid.weights();
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double d = f.values[j] - g.values[j];
        s += w[j] * d * d;
    }
    return std::sqrt(s);
}

inline FuncSample func_add(const FuncSample& f, const FuncSample& g) {
    std::vector<double> v(f.values);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += g.values[j];
    return FuncSample(FuncSample::unchecked_t{}, f.grid_hash, std::move(v));
}

inline FuncSample func_sub(const FuncSample& f, const FuncSample& g) {
    std::vector<double> v(f.values);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] -= g.values[j];
    return FuncSample(FuncSample::unchecked_t{}, f.grid_hash, std::move(v));
}

inline FuncSample func_scale(const FuncSample& f, double c) {
    std::vector<double> v(f.values);
    for (auto& x : v) x *= c;
    return FuncSample(FuncSample::unchecked_t{}, f.grid_hash, std::move(v));
}

/// Convex/linear combination sum_k c_k f_k.
inline FuncSample func_combine(const std::vector<FuncSample>& funcs, const std::vector<double>& coef) {
    if (funcs.empty() || funcs.size() != coef.size())
        throw ArgumentError("func_combine: sizes mismatch or empty");
    std::vector<double> v(funcs[0].size(), 0.0);
    for (std::size_t k = 0; k < funcs.size(); ++k)
        for (std::size_t j = 0; j < v.size(); ++j) v[j] += coef[k] * funcs[k].values[j];
    return FuncSample(FuncSample::unchecked_t{}, funcs[0].grid_hash, std::move(v));
}

/// Gram matrix of pairwise inner products.
inline Matrix gram_matrix(const std::vector<FuncSample>& funcs, const EvalGrid& grid) {
    Matrix g(funcs.size(), funcs.size());
    for (std::size_t i = 0; i < funcs.size(); ++i) {
        for (std::size_t j = i; j < funcs.size(); ++j) {
            const double v = inner_product(funcs[i], funcs[j], grid);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

/// Residual f - P_span(f), solving the regularized normal equations
/// (Gram + lambda I) c = b with lambda = 1e-10 * trace(Gram) / |span|.
/// Near-collinear spans show up routinely when K-hat exceeds the true
/// rank, so the ridge keeps this total rather than throwing. One
/// refinement pass removes the O(lambda) leftover the ridge leaves in
/// the residual.
inline FuncSample project_onto_span(const FuncSample& f, const std::vector<FuncSample>& span,
                                    const EvalGrid& grid) {
    check_aligned(f, grid, "project_onto_span");
    if (span.empty()) return f;
    for (const auto& s : span) check_aligned(s, grid, "project_onto_span");

    Matrix gram = gram_matrix(span, grid);
    double trace = 0.0;
    for (std::size_t i = 0; i < span.size(); ++i) trace += gram(i, i);
    const double lambda = 1e-10 * trace / double(span.size());
    for (std::size_t i = 0; i < span.size(); ++i) gram(i, i) += lambda;

    std::vector<double> v(f.values);
    const FuncSample::unchecked_t tag{};
    for (int pass = 0; pass < 2; ++pass) {
        const FuncSample current(tag, f.grid_hash, v);
        std::vector<double> b(span.size());
        for (std::size_t i = 0; i < span.size(); ++i)
            b[i] = inner_product(current, span[i], grid);
        const std::vector<double> c = solve_spd(gram, b);
        for (std::size_t k = 0; k < span.size(); ++k)
            for (std::size_t j = 0; j < v.size(); ++j) v[j] -= c[k] * span[k].values[j];
    }
    return FuncSample(tag, f.grid_hash, std::move(v));
}

} // namespace metahunt
