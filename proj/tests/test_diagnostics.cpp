#include "doctest.h"

#include <cmath>
#include <vector>

#include "metahunt/diagnostics.hpp"
#include "metahunt/rng.hpp"
#include "metahunt/simulation.hpp"
#include "test_helpers.hpp"

using namespace metahunt;
using mh_test::random_grid;

TEST_CASE("geometry diagnostics on hand-checkable cases") {
    SUBCASE("functions at the vertices give beta = 0") {
        Rng rng(8);
        const EvalGrid grid = random_grid(rng, 120);
        const BasisSet truth = paper_basis_set(grid);
        const GeometryDiagnostics d = geometry_diagnostics(truth.bases, truth, grid);
        CHECK(d.beta <= 1e-8);
        CHECK(d.d_max > 0.0);
        CHECK(d.sigma_star > 0.0);
    }
    SUBCASE("single constant basis") {
        const EvalGrid grid = EvalGrid::uniform({-1.0, 0.0, 1.0});
        const FuncSample c(grid, {-2.0, -2.0, -2.0});
        const BasisSet basis({c}, {0}, grid);
        const GeometryDiagnostics d = geometry_diagnostics({c}, basis, grid);
        CHECK(d.d_max == doctest::Approx(2.0));
        CHECK(d.gamma_upper == doctest::Approx(0.0));
        CHECK(d.sigma_star == 0.0);
    }
    SUBCASE("diagnostics are nonnegative and sigma* respects the sanity bound") {
        Rng rng(19);
        const EvalGrid grid = random_grid(rng, 60);
        for (int rep = 0; rep < 40; ++rep) {
            std::vector<FuncSample> funcs;
            for (int i = 0; i < 8; ++i) funcs.push_back(mh_test::random_func(rng, grid, 3.0));
            const int k = 2 + int(rng.next_u64() % 3);
            const BasisSet basis = fspa(funcs, k, grid);
            const GeometryDiagnostics d = geometry_diagnostics(funcs, basis, grid);
            CHECK(d.beta >= 0.0);
            CHECK(d.gamma_upper >= 0.0);
            CHECK(d.d_max >= 0.0);
            CHECK(d.sigma_star >= 0.0);
            CHECK(d.sigma_star <= 2.0 * d.d_max);
        }
    }
    SUBCASE("two orthogonal unit-norm bases give sigma* = 1") {
        // hand eigencomputation: centered Gram [[1/2,-1/2],[-1/2,1/2]],
        // eigenvalues {1, 0}, so sigma* = sqrt(lambda_1) = 1
        const EvalGrid grid = EvalGrid::uniform({0.0, 1.0});
        const FuncSample e1(grid, {std::sqrt(2.0), 0.0});
        const FuncSample e2(grid, {0.0, std::sqrt(2.0)});
        const BasisSet basis({e1, e2}, {0, 1}, grid);
        CHECK(sigma_star(basis) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("Theorem A1 bound check") {
    Rng rng(9);
    const EvalGrid grid = random_grid(rng, 150);
    const BasisSet truth = paper_basis_set(grid);

    SUBCASE("beta = 0: precondition holds and matching error is 0") {
        std::vector<FuncSample> funcs = truth.bases;
        for (int i = 0; i < 30; ++i) {
            const std::vector<double> pi = rng.dirichlet({2.0, 2.0, 2.0, 2.0});
            funcs.push_back(func_combine(truth.bases, pi));
        }
        const BasisSet rec = fspa(funcs, 4, grid);
        const GeometryDiagnostics d = geometry_diagnostics(funcs, truth, grid);
        const ThmA1Report rep = check_thmA1_bound(d, rec, truth);
        CHECK(rep.precondition_holds);
        CHECK(rep.matching_err <= 1e-9);
        CHECK(rep.bound_holds);
    }
    SUBCASE("large beta: bound reported as not applicable, no error") {
        std::vector<FuncSample> funcs;
        for (int i = 0; i < 10; ++i) funcs.push_back(mh_test::random_func(rng, grid, 30.0));
        const BasisSet rec = fspa(funcs, 4, grid);
        const GeometryDiagnostics d = geometry_diagnostics(funcs, truth, grid);
        const ThmA1Report rep = check_thmA1_bound(d, rec, truth);
        CHECK_FALSE(rep.precondition_holds);
    }
    SUBCASE("size mismatch is an argument error") {
        std::vector<FuncSample> funcs = truth.bases;
        const BasisSet rec = fspa(funcs, 2, grid);
        const GeometryDiagnostics d = geometry_diagnostics(funcs, truth, grid);
        CHECK_THROWS_AS(check_thmA1_bound(d, rec, truth), ArgumentError);
    }
    SUBCASE("tiny perturbations: precondition holds, fspa error obeys the bound") {
        for (std::uint64_t seed : {21u, 22u, 23u, 24u, 25u}) {
            Rng r2(seed);
            std::vector<FuncSample> funcs;
            for (int k = 0; k < 4; ++k) {
                FuncSample g = truth.bases[std::size_t(k)];
                for (auto& v : g.values) v += r2.normal(0.0, 1e-4);
                funcs.push_back(std::move(g));
            }
            for (int i = 0; i < 40; ++i) {
                const std::vector<double> pi = r2.dirichlet({3.0, 3.0, 3.0, 3.0});
                FuncSample f = func_combine(truth.bases, pi);
                for (auto& v : f.values) v += r2.normal(0.0, 1e-4);
                funcs.push_back(std::move(f));
            }
            const BasisSet rec = fspa(funcs, 4, grid);
            const GeometryDiagnostics d = geometry_diagnostics(funcs, truth, grid);
            const ThmA1Report rep = check_thmA1_bound(d, rec, truth);
            REQUIRE(rep.precondition_holds);
            CHECK(rep.bound_holds);
        }
    }
    SUBCASE("simulation model at n = 10000: bound holds whenever applicable") {
        for (std::uint64_t seed : {31u, 32u}) {
            GenerativeConfig cfg = paper_defaults();
            cfg.seed = seed;
            cfg.n_per_study = 10000;
            auto [g, sims] = generate(cfg, 100);
            std::vector<FuncSample> funcs;
            for (const auto& s : sims) funcs.push_back(s.f_hat);
            const BasisSet truth_g = paper_basis_set(g);
            const BasisSet rec = fspa(funcs, 4, g);
            const GeometryDiagnostics d = geometry_diagnostics(funcs, truth_g, g);
            const ThmA1Report rep = check_thmA1_bound(d, rec, truth_g);
            if (rep.precondition_holds) CHECK(rep.bound_holds);
        }
    }
}
