#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "metahunt/diagnostics.hpp"
#include "metahunt/simulation.hpp"
#include "test_helpers.hpp"

using namespace metahunt;

TEST_CASE("paper_defaults constants") {
    const GenerativeConfig cfg = paper_defaults();
    CHECK(cfg.m == 100);
    CHECK(cfg.n_per_study == 200);
    CHECK(cfg.noise_sd == 5.0);
    CHECK(cfg.x_sd == 5.0);
    CHECK(cfg.dirichlet_scale == 20.0);
    CHECK(cfg.w_dim == 3);
    const double rows[4][4] = {
        {1.0, -1.0, -1.0, 1.0}, {2.0, 1.0, -1.0, -1.0}, {0.0, 4.0, 0.0, 0.0}, {1.0, 0.0, -3.0, 0.0}};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(cfg.beta(i, j) == rows[i][j]);

    SUBCASE("basis functions at spot values") {
        CHECK(paper_basis_value(0, 2.0) == -1.0);          // -2x + 3
        CHECK(paper_basis_value(1, 6.0) == 9.0);           // x^2 / 4
        CHECK(paper_basis_value(2, 0.0) == 0.0);           // 10 sin(x/3)
        CHECK(paper_basis_value(3, -4.0) == 0.0);          // -2|x + 4|
        CHECK(paper_basis_value(3, 1.0) == -10.0);
    }
}

TEST_CASE("sample_dirichlet moments") {
    Rng rng(61);
    const std::vector<double> alpha{3.0, 1.0, 6.0};
    const double alpha_sum = 10.0;
    std::vector<double> mean(3, 0.0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const SimplexWeights w = sample_dirichlet(alpha, rng);
        double sum = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            sum += w[k];
            mean[k] += w[k];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (std::size_t k = 0; k < 3; ++k) {
        mean[k] /= draws;
        const double p = alpha[k] / alpha_sum;
        const double se = std::sqrt(p * (1 - p) / (alpha_sum + 1) / draws);
        CHECK(std::fabs(mean[k] - p) < 3.0 * se);
    }
}

TEST_CASE("generate determinism and structure") {
    GenerativeConfig cfg = paper_defaults();
    cfg.m = 20;
    cfg.seed = 303;

    auto [g1, s1] = generate(cfg, 150);
    auto [g2, s2] = generate(cfg, 150);

    SUBCASE("bitwise identical for the same seed") {
        CHECK(g1.points() == g2.points());
        for (std::size_t i = 0; i < s1.size(); ++i) {
            CHECK(s1[i].covariates == s2[i].covariates);
            CHECK(s1[i].f_hat.values == s2[i].f_hat.values);
            CHECK(s1[i].pi_true.w == s2[i].pi_true.w);
        }
    }
    SUBCASE("different seeds differ") {
        GenerativeConfig other = cfg;
        other.seed = 304;
        auto [g3, s3] = generate(other, 150);
        CHECK(g3.points() != g1.points());
        CHECK(s3[0].f_hat.values != s1[0].f_hat.values);
    }
    SUBCASE("f_true lies exactly in the hull of the true bases") {
        const BasisSet truth = paper_basis_set(g1);
        for (const auto& s : s1) {
            CHECK(project_to_hull(s.f_true, truth, g1).residual_norm <= 1e-9);
            const FuncSample direct = func_combine(truth.bases, s.pi_true.w);
            for (std::size_t j = 0; j < g1.size(); ++j)
                CHECK(std::fabs(direct.values[j] - s.f_true.values[j]) <=
                      1e-12 * std::max(1.0, std::fabs(direct.values[j])));
        }
    }
    SUBCASE("individual noise has mean zero at CLT scale") {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& s : s1) {
            for (std::size_t j = 0; j < s.xs.size(); ++j) {
                double f = 0.0;
                for (int k = 0; k < kPaperBasisCount; ++k)
                    f += s.pi_true[std::size_t(k)] * paper_basis_value(k, s.xs[j]);
                sum += s.ys[j] - f;
                ++n;
            }
        }
        CHECK(std::fabs(sum / double(n)) < 3.0 * cfg.noise_sd / std::sqrt(double(n)));
    }
    SUBCASE("weights at W = 0 match the Dirichlet moment formula") {
        const std::vector<double> alpha0 = dirichlet_alpha_at(cfg, {0.0, 0.0, 0.0});
        double alpha_sum = 0.0;
        for (double a : alpha0) alpha_sum += a;
        Rng rng(62);
        std::vector<double> mean(4, 0.0);
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) {
            const SimplexWeights w = sample_dirichlet(alpha0, rng);
            for (std::size_t k = 0; k < 4; ++k) mean[k] += w[k];
        }
        for (std::size_t k = 0; k < 4; ++k) {
            mean[k] /= draws;
            const double p = alpha0[k] / alpha_sum;
            const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / (alpha_sum + 1) / draws);
            CHECK(std::fabs(mean[k] - p) < 3.0 * se);
        }
    }
}

TEST_CASE("estimate_study_function examples") {
    Rng rng(63);

    SUBCASE("constant responses give a constant estimate") {
        const EvalGrid grid = mh_test::random_grid(rng, 80);
        std::vector<double> xs(50), ys(50, 4.25);
        for (auto& x : xs) x = rng.normal(0, 5);
        const FuncSample f = estimate_study_function(xs, ys, grid);
        for (double v : f.values) CHECK(v == doctest::Approx(4.25).epsilon(1e-12));
    }
    SUBCASE("noiseless linear trend on dense data: frozen bias band") {
        // band (max abs error <= 0.2 on the central 90%) frozen from pilot
        // runs at n = 2e5, where the smoother bias ~ 2 x^2 h^2/(25+h^2)
        const int n = 200000;
        std::vector<double> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
        Rng drng(64);
        for (int i = 0; i < n; ++i) {
            xs[std::size_t(i)] = drng.normal(0, 5);
            ys[std::size_t(i)] = 2.0 * xs[std::size_t(i)];
        }
        const EvalGrid grid = mh_test::random_grid(drng, 200);
        const FuncSample f = estimate_study_function(xs, ys, grid);
        // central 90% of grid points by order statistics (points are sorted)
        const std::size_t lo = grid.size() / 20, hi = grid.size() - grid.size() / 20;
        double max_err = 0.0;
        for (std::size_t j = lo; j < hi; ++j)
            max_err = std::max(max_err, std::fabs(f.values[j] - 2.0 * grid.points()[j]));
        CHECK(max_err <= 0.2);
    }
    SUBCASE("per-study error decreases as n grows") {
        double err200 = 0.0, err2000 = 0.0;
        for (std::uint64_t seed : {71u, 72u, 73u}) {
            GenerativeConfig cfg = paper_defaults();
            cfg.m = 10;
            cfg.seed = seed;
            cfg.n_per_study = 200;
            auto [g1, s1] = generate(cfg, 200);
            for (const auto& s : s1) err200 += l2_dist(s.f_hat, s.f_true, g1);
            cfg.n_per_study = 2000;
            auto [g2, s2] = generate(cfg, 200);
            for (const auto& s : s2) err2000 += l2_dist(s.f_hat, s.f_true, g2);
        }
        CHECK(err2000 < err200);
    }
    SUBCASE("fewer than 10 individuals is an argument error") {
        const EvalGrid grid = mh_test::random_grid(rng, 30);
        std::vector<double> xs(5, 1.0), ys(5, 1.0);
        CHECK_THROWS_AS(estimate_study_function(xs, ys, grid), ArgumentError);
    }
}

TEST_CASE("oracle-input basis recovery at m = 400") {
    // exact functions, theoretical tuning computed from the oracle purity
    // quantities: the recovery error stays below 0.05 d_max on a majority
    // of seeds (it is driven by purity alone)
    int ok = 0;
    const int seeds = 12;
    for (int s = 0; s < seeds; ++s) {
        GenerativeConfig cfg = paper_defaults();
        cfg.m = 400;
        cfg.seed = 8800 + std::uint64_t(s);
        Rng master(cfg.seed);
        Rng grng = master.split(1);
        std::vector<double> pts(500);
        for (auto& x : pts) x = grng.normal(0, 5);
        std::sort(pts.begin(), pts.end());
        const EvalGrid grid = EvalGrid::uniform(pts);
        std::vector<FuncSample> funcs;
        std::vector<SimplexWeights> pis;
        for (int i = 0; i < cfg.m; ++i) {
            Rng rng = master.split(2, std::uint64_t(i));
            SimulatedStudy st = simulate_study_layer1(cfg, grid, rng);
            funcs.push_back(st.f_true);
            pis.push_back(st.pi_true);
        }
        const BasisSet truth = paper_basis_set(grid);

        double delta_m = 0.0;
        std::vector<double> best(4, 0.0);
        for (const auto& p : pis)
            for (std::size_t k = 0; k < 4; ++k) best[k] = std::max(best[k], p[k]);
        for (double b : best) delta_m = std::max(delta_m, 1.0 - b);
        int min_near = cfg.m;
        for (std::size_t k = 0; k < 4; ++k) {
            int c = 0;
            for (const auto& p : pis)
                if (p[k] >= 1.0 - delta_m) ++c;
            min_near = std::min(min_near, c);
        }
        const GeometryDiagnostics d = geometry_diagnostics({}, truth, grid);
        // exact inputs: the estimation-error term of the radius vanishes
        const DenoiseParams dn =
            theoretical_tuning(delta_m, d.gamma_upper, 1e12, 0.5, 1.0, min_near);
        const double err = matching_error(dfspa(funcs, 4, dn, grid), truth);
        if (err < 0.05 * d.d_max) ++ok;
    }
    CHECK(2 * ok > seeds);
}

TEST_CASE("experiment threading cap does not change results") {
    GenerativeConfig cfg = paper_defaults();
    cfg.m = 40;
    cfg.seed = 17;
    setenv("METAHUNT_THREADS", "1", 1);
    const CoverageReport serial = run_coverage_experiment(cfg, 0.2, 3, 4, false, 120);
    const std::vector<MseRow> rows1 = run_mse_experiment(cfg, {20}, {2}, 2, 3, 100);
    setenv("METAHUNT_THREADS", "2", 1);
    const CoverageReport threaded = run_coverage_experiment(cfg, 0.2, 3, 4, false, 120);
    const std::vector<MseRow> rows2 = run_mse_experiment(cfg, {20}, {2}, 2, 3, 100);
    unsetenv("METAHUNT_THREADS");
    CHECK(serial.coverage == threaded.coverage);
    CHECK(serial.mean_length == threaded.mean_length);
    REQUIRE(rows1.size() == rows2.size());
    for (std::size_t i = 0; i < rows1.size(); ++i) CHECK(rows1[i].mse == rows2[i].mse);
}

TEST_CASE("experiment smoke runs") {
    SUBCASE("mse experiment rows are complete and finite") {
        GenerativeConfig cfg = paper_defaults();
        cfg.seed = 99;
        const std::vector<MseRow> rows = run_mse_experiment(cfg, {30}, {2, 4}, 2, 5, 120);
        CHECK(rows.size() == 4);
        for (const auto& r : rows) {
            CHECK(r.m == 30);
            CHECK(std::isfinite(r.mse));
            CHECK(r.mse >= 0.0);
        }
        CHECK(mean_mse(rows, 30, 2) > 0.0);
    }
    SUBCASE("coverage experiment: alpha = 0.5 gives shorter intervals than 0.05") {
        GenerativeConfig cfg = paper_defaults(); // m = 100 keeps both quantiles finite
        cfg.seed = 100;
        // the >= 1 - alpha guarantee is about exchangeable inputs, so the
        // coverage claim is checked on the oracle-function variant
        const CoverageReport tight = run_coverage_experiment(cfg, 0.5, 6, 10, true, 150);
        const CoverageReport wide = run_coverage_experiment(cfg, 0.05, 6, 10, true, 150);
        CHECK(tight.coverage >= 0.5);
        CHECK(tight.mean_length < wide.mean_length);
        CHECK(wide.coverage >= tight.coverage);
        // lengths stay monotone on noisy estimates too
        const CoverageReport tight_est = run_coverage_experiment(cfg, 0.5, 4, 5, false, 150);
        const CoverageReport wide_est = run_coverage_experiment(cfg, 0.05, 4, 5, false, 150);
        CHECK(tight_est.mean_length < wide_est.mean_length);
    }
}
