#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "metahunt/rng.hpp"
#include "metahunt/simplex.hpp"

using namespace metahunt;

namespace {

double qp_objective(const Matrix& gram, const std::vector<double>& b,
                    const std::vector<double>& w) {
    const std::vector<double> gw = mat_vec(gram, w);
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * gw[j] - 2.0 * b[j] * w[j];
    return s;
}

/// Exhaustive simplex grid search for K = 3 at the given step.
double grid_search_min(const Matrix& gram, const std::vector<double>& b, double step) {
    double best = std::numeric_limits<double>::infinity();
    const int n = int(std::lround(1.0 / step));
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; i + j <= n; ++j) {
            const double w1 = double(i) * step;
            const double w2 = double(j) * step;
            const double w3 = 1.0 - w1 - w2;
            best = std::min(best, qp_objective(gram, b, {w1, w2, w3}));
        }
    }
    return best;
}

} // namespace

TEST_CASE("project_to_simplex basics") {
    const std::vector<double> w = project_to_simplex({0.2, 0.3, 0.5});
    CHECK(w[0] == doctest::Approx(0.2));
    CHECK(w[1] == doctest::Approx(0.3));
    CHECK(w[2] == doctest::Approx(0.5));

    const std::vector<double> v = project_to_simplex({10.0, 0.0, -5.0});
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == doctest::Approx(0.0));

    Rng rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> x(2 + rng.next_u64() % 6);
        for (auto& xi : x) xi = rng.normal(0.0, 3.0);
        const std::vector<double> p = project_to_simplex(x);
        double sum = 0.0;
        for (double pi : p) {
            CHECK(pi >= 0.0);
            sum += pi;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        // projection optimality: moving mass between any two active
        // coordinates cannot get closer to x
        for (std::size_t aidx = 0; aidx < p.size(); ++aidx)
            for (std::size_t bidx = 0; bidx < p.size(); ++bidx) {
                if (aidx == bidx || p[aidx] < 1e-9) continue;
                const double eps = std::min(1e-6, p[aidx]);
                std::vector<double> q = p;
                q[aidx] -= eps;
                q[bidx] += eps;
                double dp = 0.0, dq = 0.0;
                for (std::size_t j = 0; j < p.size(); ++j) {
                    dp += (p[j] - x[j]) * (p[j] - x[j]);
                    dq += (q[j] - x[j]) * (q[j] - x[j]);
                }
                CHECK(dp <= dq + 1e-12);
            }
    }
}

TEST_CASE("simplex_qp matches grid search on random K=3 instances") {
    Rng rng(99);
    for (int rep = 0; rep < 25; ++rep) {
        // small-norm factors keep the grid oracle's own discretization error
        // below the comparison tolerance
        Matrix f(3, 6);
        for (auto& v : f.data) v = rng.normal(0.0, 0.1);
        Matrix gram(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < 6; ++c) s += f(i, c) * f(j, c);
                gram(i, j) = s;
            }
        std::vector<double> b(3);
        for (auto& v : b) v = rng.normal(0.0, 0.02);

        const SimplexQpResult qp = simplex_qp(gram, b);
        const double qp_obj = qp_objective(gram, b, qp.w);
        const double grid_obj = grid_search_min(gram, b, 0.005);
        CHECK(std::fabs(qp_obj - grid_obj) < 1e-5);
        CHECK(qp_obj <= grid_obj + 1e-10);
    }
}
