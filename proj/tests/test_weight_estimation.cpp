#include "doctest.h"

#include <cmath>
#include <vector>

#include "metahunt/rng.hpp"
#include "metahunt/simulation.hpp"
#include "metahunt/weight_estimation.hpp"
#include "test_helpers.hpp"

using namespace metahunt;
using mh_test::random_grid;

TEST_CASE("SimplexWeights invariants") {
    const SimplexWeights w({0.25, 0.75});
    CHECK(w[0] == 0.25);
    const SimplexWeights clamped({1.0 + 5e-13, -5e-13});
    CHECK(clamped[1] == 0.0);
    CHECK(clamped[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(SimplexWeights({0.5, 0.4}), ArgumentError);
    CHECK_THROWS_AS(SimplexWeights({1.1, -0.1}), ArgumentError);
}

TEST_CASE("project_to_hull examples") {
    Rng rng(12);
    const EvalGrid grid = random_grid(rng, 100);
    const BasisSet basis = paper_basis_set(grid);

    SUBCASE("a vertex projects to its own coordinate") {
        const HullProjection p = project_to_hull(basis.bases[0], basis, grid);
        CHECK(p.weights[0] == doctest::Approx(1.0).epsilon(1e-7));
        CHECK(p.residual_norm <= 1e-6);
    }
    SUBCASE("midpoint of two orthogonal equal-norm bases splits evenly") {
        const EvalGrid g2 = EvalGrid::uniform({0.0, 1.0});
        const FuncSample e1(g2, {2.0, 0.0});
        const FuncSample e2(g2, {0.0, 2.0});
        const BasisSet ob({e1, e2}, {0, 1}, g2);
        const FuncSample mid(g2, {1.0, 1.0});
        const HullProjection p = project_to_hull(mid, ob, g2);
        CHECK(p.weights[0] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(p.weights[1] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(p.residual_norm <= 1e-9);
    }
    SUBCASE("KKT stationarity at the returned weights") {
        for (int rep = 0; rep < 50; ++rep) {
            const FuncSample f = mh_test::random_func(rng, grid, 8.0);
            const HullProjection p = project_to_hull(f, basis, grid);
            const Matrix gram = gram_matrix(basis.bases, grid);
            std::vector<double> b(basis.size());
            for (std::size_t k = 0; k < basis.size(); ++k)
                b[k] = inner_product(f, basis.bases[k], grid);
            const std::vector<double> gw = mat_vec(gram, p.weights.w);
            double bnorm = 0.0;
            for (double v : b) bnorm += v * v;
            bnorm = std::sqrt(bnorm);
            double mu = 0.0;
            int active = 0;
            for (std::size_t k = 0; k < basis.size(); ++k)
                if (p.weights[k] > 1e-8) {
                    mu += 2.0 * (gw[k] - b[k]);
                    ++active;
                }
            mu /= double(active);
            for (std::size_t k = 0; k < basis.size(); ++k)
                if (p.weights[k] > 1e-8)
                    CHECK(std::fabs(2.0 * (gw[k] - b[k]) - mu) <= 1e-6 * std::max(1.0, bnorm));
        }
    }
    SUBCASE("scaling equivariance: residual scales, weights unchanged") {
        for (int rep = 0; rep < 20; ++rep) {
            const FuncSample f = mh_test::random_func(rng, grid, 6.0);
            const double c = rng.uniform(0.2, 5.0);
            const HullProjection p1 = project_to_hull(f, basis, grid);
            std::vector<FuncSample> scaled_bases;
            for (const auto& g : basis.bases) scaled_bases.push_back(func_scale(g, c));
            const BasisSet sb(scaled_bases, basis.source_indices, grid);
            const HullProjection p2 = project_to_hull(func_scale(f, c), sb, grid);
            CHECK(p2.residual_norm == doctest::Approx(c * p1.residual_norm).epsilon(1e-9));
            for (std::size_t k = 0; k < basis.size(); ++k)
                CHECK(std::fabs(p2.weights[k] - p1.weights[k]) <= 1e-9);
        }
    }
}

TEST_CASE("reconstruction_error examples") {
    Rng rng(13);
    const EvalGrid grid = random_grid(rng, 100);
    const BasisSet basis = paper_basis_set(grid);

    SUBCASE("noiseless mixtures reconstruct to zero") {
        std::vector<FuncSample> funcs;
        for (int i = 0; i < 15; ++i) {
            const std::vector<double> pi = rng.dirichlet({1.5, 1.5, 1.5, 1.5});
            funcs.push_back(func_combine(basis.bases, pi));
        }
        CHECK(reconstruction_error(funcs, basis, grid) <= 1e-7);
    }
    SUBCASE("basis equal to the functions themselves gives zero") {
        std::vector<FuncSample> funcs;
        for (int i = 0; i < 4; ++i) funcs.push_back(mh_test::random_func(rng, grid, 3.0));
        const BasisSet self(funcs, {0, 1, 2, 3}, grid);
        CHECK(reconstruction_error(funcs, self, grid) <= 1e-8);
    }
    SUBCASE("simulation model: E(2) > E(4) via the d-fSPA prefix") {
        for (std::uint64_t seed : {41u, 42u, 43u}) {
            GenerativeConfig cfg = paper_defaults();
            cfg.seed = seed;
            auto [g, sims] = generate(cfg, 300);
            std::vector<FuncSample> funcs;
            for (const auto& s : sims) funcs.push_back(s.f_hat);
            const DenoiseParams dn = default_tuning(funcs, g, cfg.m);
            const BasisSet b4 = dfspa(funcs, 4, dn, g);
            const BasisSet b2(std::vector<FuncSample>(b4.bases.begin(), b4.bases.begin() + 2),
                              std::vector<int>(b4.source_indices.begin(),
                                               b4.source_indices.begin() + 2),
                              g);
            CHECK(reconstruction_error(funcs, b2, g) > reconstruction_error(funcs, b4, g));
        }
    }
}
