#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "metahunt/basis_hunting.hpp"
#include "metahunt/errors.hpp"
#include "metahunt/function_space.hpp"
#include "metahunt/simplex.hpp"

namespace metahunt {

/// Simplex-valued mixing weights. Construction clamps negatives within
/// -1e-12 to zero and renormalizes, so stored weights satisfy the simplex
/// constraints exactly.
struct SimplexWeights {
    std::vector<double> w;

    SimplexWeights() = default;

    explicit SimplexWeights(std::vector<double> weights) : w(std::move(weights)) {
        if (w.empty()) throw ArgumentError("SimplexWeights: empty");
        double sum = 0.0;
        for (auto& x : w) {
            if (x < 0.0) {
                if (x < -1e-12)
                    throw ArgumentError("SimplexWeights: negative weight " + std::to_string(x));
                x = 0.0;
            }
            sum += x;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw ArgumentError("SimplexWeights: sum " + std::to_string(sum) + " is not 1");
        for (auto& x : w) x /= sum;
    }

    std::size_t size() const { return w.size(); }
    double operator[](std::size_t k) const { return w[k]; }
};

struct HullProjection {
    SimplexWeights weights;
    double residual_norm = 0.0;
    bool qp_converged = true;
};

/// argmin over the simplex of || f - sum_k w_k g_k ||, solved as the
/// quadratic program min w'Gram w - 2 b'w with b_k = <f, g_k>.
inline HullProjection project_to_hull(const FuncSample& f, const BasisSet& basis,
                                      const EvalGrid& grid) {
    check_aligned(f, grid, "project_to_hull");
    const Matrix gram = gram_matrix(basis.bases, grid);
    std::vector<double> b(basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k)
        b[k] = inner_product(f, basis.bases[k], grid);

    SimplexQpResult qp = simplex_qp(gram, b);
    HullProjection out;
    out.qp_converged = qp.converged;
    out.weights = SimplexWeights(std::move(qp.w));
    out.residual_norm = l2_dist(f, func_combine(basis.bases, out.weights.w), grid);
    return out;
}

/// Reconstruction error: mean over studies of the hull-projection residual
/// norms (not squared).
inline double reconstruction_error(const std::vector<FuncSample>& functions, const BasisSet& basis,
                                   const EvalGrid& grid) {
    if (functions.empty()) throw ArgumentError("reconstruction_error: no functions");
    double sum = 0.0;
    for (const auto& f : functions) sum += project_to_hull(f, basis, grid).residual_norm;
    return sum / double(functions.size());
}

} // namespace metahunt
