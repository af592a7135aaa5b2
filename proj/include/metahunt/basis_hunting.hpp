#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "metahunt/errors.hpp"
#include "metahunt/function_space.hpp"

namespace metahunt {

/// Tuning parameters of the denoising step: minimum neighborhood count N
/// and neighborhood radius delta (in function-norm units).
struct DenoiseParams {
    int n_min = 1;
    double delta = 0.0;

    DenoiseParams() = default;
    DenoiseParams(int n, double d) : n_min(n), delta(d) {
        if (n_min < 1) throw ArgumentError("DenoiseParams: N must be >= 1");
        if (!(delta >= 0.0)) throw ArgumentError("DenoiseParams: delta must be >= 0");
    }
};

/// Sentinel for bases that are neighborhood averages with no unique
/// originating study.
inline constexpr int kAveragedOrigin = -1;

/// Ordered set of recovered basis functions with provenance indices.
struct BasisSet {
    std::vector<FuncSample> bases;
    std::vector<int> source_indices; // original study index, or kAveragedOrigin
    EvalGrid grid;

    BasisSet(std::vector<FuncSample> b, std::vector<int> src, EvalGrid g)
        : bases(std::move(b)), source_indices(std::move(src)), grid(std::move(g)) {
        if (bases.empty()) throw ArgumentError("BasisSet: need at least one basis");
        if (source_indices.size() != bases.size())
            throw ArgumentError("BasisSet: source index count mismatch");
        for (const auto& f : bases) check_aligned(f, grid, "BasisSet");
        for (std::size_t i = 0; i < bases.size(); ++i)
            for (std::size_t j = i + 1; j < bases.size(); ++j)
                if (l2_dist(bases[i], bases[j], grid) <= 0.0)
                    throw ArgumentError("BasisSet: bases must be pairwise distinct");
    }

    std::size_t size() const { return bases.size(); }
};

struct DenoiseResult {
    std::vector<FuncSample> functions;
    std::vector<int> original_indices;     // retained -> original study index
    std::vector<bool> averaged;            // true if the neighborhood had > 1 member
};

inline std::vector<std::vector<double>> pairwise_distances(const std::vector<FuncSample>& funcs,
                                                           const EvalGrid& grid) {
    const std::size_t m = funcs.size();
    std::vector<std::vector<double>> d(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double v = l2_dist(funcs[i], funcs[j], grid);
            d[i][j] = v;
            d[j][i] = v;
        }
    return d;
}

/// Denoising step of Algorithm 1. Neighborhoods are computed against the
/// original inputs in one pass (never progressively updated): a function
/// with fewer than N inputs within distance delta (itself included) is
/// dropped, otherwise it is replaced by its neighborhood average.
inline DenoiseResult denoise(const std::vector<FuncSample>& functions, const DenoiseParams& params,
                             const EvalGrid& grid) {
    if (functions.empty()) throw ArgumentError("denoise: no functions");
    for (const auto& f : functions) check_aligned(f, grid, "denoise");
    const std::size_t m = functions.size();
    const auto dist = pairwise_distances(functions, grid);

    DenoiseResult out;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::size_t> nbrs;
        for (std::size_t j = 0; j < m; ++j)
            if (dist[i][j] <= params.delta) nbrs.push_back(j);
        if (int(nbrs.size()) < params.n_min) continue;
        std::vector<double> avg(grid.size(), 0.0);
        for (std::size_t j : nbrs)
            for (std::size_t g = 0; g < avg.size(); ++g) avg[g] += functions[j].values[g];
        const double inv = 1.0 / double(nbrs.size());
        for (auto& v : avg) v *= inv;
        out.functions.emplace_back(FuncSample::unchecked_t{}, grid.hash(), std::move(avg));
        out.original_indices.push_back(int(i));
        out.averaged.push_back(nbrs.size() > 1);
    }
    if (out.functions.empty())
        throw ArgumentError("denoise: empty after denoising (lower N or raise delta)");
    return out;
}

/// Functional Successive Projection Algorithm. Greedy: at each step every
/// input is projected off the span of the selections so far and the one
/// with the largest residual norm is appended (ties break to the lowest
/// index). Stops early if all residual norms are numerically zero, so the
/// returned set stays pairwise distinct.
inline BasisSet fspa(const std::vector<FuncSample>& functions, int k_hat, const EvalGrid& grid) {
    if (k_hat < 1) throw ArgumentError("fspa: k_hat must be >= 1");
    if (std::size_t(k_hat) > functions.size())
        throw ArgumentError("fspa: k_hat=" + std::to_string(k_hat) + " exceeds input count " +
                            std::to_string(functions.size()));
    for (const auto& f : functions) check_aligned(f, grid, "fspa");

    // the span-projection ridge leaves residuals ~1e-10 * ||f|| on exact
    // duplicates, so the degenerate-direction cutoff sits above that
    double max_initial = 0.0;
    for (const auto& f : functions) max_initial = std::max(max_initial, l2_norm(f, grid));
    const double stop_tol = 1e-9 * std::max(1.0, max_initial);

    std::vector<FuncSample> selected;
    std::vector<int> sources;
    for (int k = 0; k < k_hat; ++k) {
        std::size_t best = 0;
        double best_norm = -1.0;
        for (std::size_t i = 0; i < functions.size(); ++i) {
            const FuncSample h = project_onto_span(functions[i], selected, grid);
            const double norm = l2_norm(h, grid);
            if (norm > best_norm) {
                best_norm = norm;
                best = i;
            }
        }
        if (best_norm <= stop_tol) break; // no independent direction left
        selected.push_back(functions[best]);
        sources.push_back(int(best));
    }
    if (selected.empty()) throw ArgumentError("fspa: all inputs are numerically zero");
    return BasisSet(std::move(selected), std::move(sources), grid);
}

/// Denoise-then-fSPA (Algorithm 1 in full). source_indices map back to the
/// original studies when a neighborhood had a unique representative, else
/// carry the averaged-origin sentinel.
inline BasisSet dfspa(const std::vector<FuncSample>& functions, int k_hat,
                      const DenoiseParams& params, const EvalGrid& grid) {
    DenoiseResult den = denoise(functions, params, grid);
    if (std::size_t(k_hat) > den.functions.size())
        throw ArgumentError("dfspa: k_hat=" + std::to_string(k_hat) +
                            " exceeds retained count " + std::to_string(den.functions.size()) +
                            " after denoising");
    BasisSet basis = fspa(den.functions, k_hat, grid);
    for (auto& src : basis.source_indices) {
        const std::size_t pos = std::size_t(src);
        src = den.averaged[pos] ? kAveragedOrigin : den.original_indices[pos];
    }
    return basis;
}

/// Heuristic tuning: N = max(1, round(0.5 ln m)), delta = max pairwise
/// distance / 10. Natural log; round half up.
inline DenoiseParams default_tuning(const std::vector<FuncSample>& functions, const EvalGrid& grid,
                                    int m) {
    if (m < 2) throw ArgumentError("default_tuning: need m >= 2");
    const int n = std::max(1, int(std::floor(0.5 * std::log(double(m)) + 0.5)));
    double max_dist = 0.0;
    const auto d = pairwise_distances(functions, grid);
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = i + 1; j < d.size(); ++j) max_dist = std::max(max_dist, d[i][j]);
    return DenoiseParams(n, max_dist / 10.0);
}

/// Schedule for varying m: delta = max pairwise distance / (0.2 (m - 100) + 10)
/// once m >= 100 (coincides with default_tuning at m = 100), /10 below.
inline DenoiseParams schedule_tuning(const std::vector<FuncSample>& functions, const EvalGrid& grid,
                                     int m) {
    DenoiseParams base = default_tuning(functions, grid, m);
    if (m >= 100) {
        const double divisor = 0.2 * double(m - 100) + 10.0;
        base.delta = base.delta * 10.0 / divisor;
    }
    return base;
}

/// Theory-driven tuning: delta = C (delta_m gamma + n_min^{(a-r)/2}),
/// N = floor(c min_k M_k). Requires oracle quantities (purity level, near-
/// pure counts), so it is only usable where ground truth exists.
inline DenoiseParams theoretical_tuning(double delta_m, double gamma, double n_min, double a,
                                        double r, int min_near_pure_count, double big_c = 5.0,
                                        double small_c = 1.0) {
    if (!(r > a && a > 0.0)) throw ArgumentError("theoretical_tuning: need 0 < a < r");
    if (min_near_pure_count < 1)
        throw ArgumentError("theoretical_tuning: need at least one near-pure study per vertex");
    const double delta = big_c * (delta_m * gamma + std::pow(n_min, (a - r) / 2.0));
    const int n = std::max(1, int(std::floor(small_c * double(min_near_pure_count))));
    return DenoiseParams(n, delta);
}

namespace detail {

inline void matching_recurse(const std::vector<std::vector<double>>& d, std::vector<bool>& used,
                             std::size_t k, double current_max, double& best) {
    if (current_max >= best) return;
    if (k == d.size()) {
        best = current_max;
        return;
    }
    for (std::size_t j = 0; j < d.size(); ++j) {
        if (used[j]) continue;
        used[j] = true;
        matching_recurse(d, used, k + 1, std::max(current_max, d[k][j]), best);
        used[j] = false;
    }
}

} // namespace detail

/// min over permutations pi of max_k || recovered_k - truth_{pi(k)} ||.
/// Branch-and-bound over permutations; K is small by design.
inline double matching_error(const BasisSet& recovered, const BasisSet& truth) {
    if (recovered.size() != truth.size())
        throw ArgumentError("matching_error: basis counts differ");
    const std::size_t k = recovered.size();
    std::vector<std::vector<double>> d(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            d[i][j] = l2_dist(recovered.bases[i], truth.bases[j], recovered.grid);
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> used(k, false);
    detail::matching_recurse(d, used, 0, 0.0, best);
    return best;
}

} // namespace metahunt
