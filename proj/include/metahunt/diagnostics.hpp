#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "metahunt/basis_hunting.hpp"
#include "metahunt/function_space.hpp"
#include "metahunt/linalg.hpp"
#include "metahunt/weight_estimation.hpp"

namespace metahunt {

/// Computable geometry quantities of the simplex spanned by a basis.
/// gamma_upper is the centroid bound on the minimax radius, not the exact
/// Chebyshev-center value.
struct GeometryDiagnostics {
    double beta = 0.0;
    double gamma_upper = 0.0;
    double d_max = 0.0;
    double sigma_star = 0.0;
};

/// sigma* = sqrt of the (K-1)-th largest eigenvalue of the centered Gram
/// matrix; zero for a single basis function.
inline double sigma_star(const BasisSet& basis) {
    const std::size_t k = basis.size();
    if (k < 2) return 0.0;
    std::vector<double> mean(basis.grid.size(), 0.0);
    for (const auto& g : basis.bases)
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += g.values[j];
    for (auto& v : mean) v /= double(k);
    std::vector<FuncSample> centered;
    centered.reserve(k);
    for (const auto& g : basis.bases) {
        std::vector<double> v(g.values);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= mean[j];
        centered.emplace_back(FuncSample::unchecked_t{}, basis.grid.hash(), std::move(v));
    }
    const EigenDecomposition eig = jacobi_eigen(gram_matrix(centered, basis.grid));
    return std::sqrt(std::max(0.0, eig.values[k - 2]));
}

inline GeometryDiagnostics geometry_diagnostics(const std::vector<FuncSample>& functions,
                                                const BasisSet& basis, const EvalGrid& grid) {
    GeometryDiagnostics diag;

    std::vector<double> mean(grid.size(), 0.0);
    for (const auto& g : basis.bases)
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += g.values[j];
    for (auto& v : mean) v /= double(basis.size());
    const FuncSample centroid(FuncSample::unchecked_t{}, grid.hash(), std::move(mean));

    for (const auto& g : basis.bases) {
        diag.d_max = std::max(diag.d_max, l2_norm(g, grid));
        diag.gamma_upper = std::max(diag.gamma_upper, l2_dist(g, centroid, grid));
    }
    diag.sigma_star = sigma_star(basis);

    // beta = max( max_i Dist(f_i, S), max_k min_i ||f_i - g_k|| )
    double max_hull_dist = 0.0;
    for (const auto& f : functions)
        max_hull_dist = std::max(max_hull_dist, project_to_hull(f, basis, grid).residual_norm);
    double max_vertex_gap = 0.0;
    for (const auto& g : basis.bases) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& f : functions) nearest = std::min(nearest, l2_dist(f, g, grid));
        max_vertex_gap = std::max(max_vertex_gap, nearest);
    }
    diag.beta = std::max(max_hull_dist, max_vertex_gap);
    return diag;
}

/// Result of checking the fSPA finite-sample error bound. Used only as a
/// test oracle; gamma_upper >= gamma makes the checked bound conservative.
struct ThmA1Report {
    bool precondition_holds = false;
    double matching_err = 0.0;
    double error_bound = 0.0;
    bool bound_holds = false; // meaningful only when precondition_holds
};

/// Precondition: 450 d_max max{1, d_max/sigma*} beta <= sigma*^2.
/// Bound: matching error <= (1 + 30 gamma/sigma* max{1, d_max/sigma*}) beta.
inline ThmA1Report check_thmA1_bound(const GeometryDiagnostics& diag, const BasisSet& recovered,
                                     const BasisSet& truth) {
    if (recovered.size() != truth.size())
        throw ArgumentError("check_thmA1_bound: basis counts differ");
    ThmA1Report rep;
    rep.matching_err = matching_error(recovered, truth);
    if (diag.sigma_star <= 0.0) return rep; // degenerate geometry: bound not applicable

    const double shape = std::max(1.0, diag.d_max / diag.sigma_star);
    rep.precondition_holds =
        450.0 * diag.d_max * shape * diag.beta <= diag.sigma_star * diag.sigma_star;
    rep.error_bound = (1.0 + 30.0 * diag.gamma_upper / diag.sigma_star * shape) * diag.beta;
    rep.bound_holds = rep.matching_err <= rep.error_bound + 1e-12;
    return rep;
}

} // namespace metahunt
