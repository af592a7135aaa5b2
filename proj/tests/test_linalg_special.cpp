#include "doctest.h"

#include <cmath>

#include "metahunt/linalg.hpp"
#include "metahunt/rng.hpp"
#include "metahunt/special_functions.hpp"

using namespace metahunt;

TEST_CASE("jacobi_eigen on hand-checkable matrices") {
    Matrix a(2, 2);
    a(0, 0) = 0.5;
    a(0, 1) = -0.5;
    a(1, 0) = -0.5;
    a(1, 1) = 0.5;
    const EigenDecomposition eig = jacobi_eigen(a);
    CHECK(eig.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eig.values[1] == doctest::Approx(0.0).epsilon(1e-12));

    Matrix d(3, 3);
    d(0, 0) = 3.0;
    d(1, 1) = -1.0;
    d(2, 2) = 2.0;
    const EigenDecomposition ed = jacobi_eigen(d);
    CHECK(ed.values[0] == doctest::Approx(3.0));
    CHECK(ed.values[1] == doctest::Approx(2.0));
    CHECK(ed.values[2] == doctest::Approx(-1.0));
}

TEST_CASE("jacobi_eigen reconstructs random symmetric matrices") {
    Rng rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 6;
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                const double v = rng.normal(0.0, 2.0);
                a(i, j) = v;
                a(j, i) = v;
            }
        const EigenDecomposition eig = jacobi_eigen(a);
        // A v_j = lambda_j v_j
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = eig.vectors(i, j);
            const std::vector<double> av = mat_vec(a, v);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(av[i] == doctest::Approx(eig.values[j] * v[i]).epsilon(1e-8).scale(10.0));
        }
    }
}

TEST_CASE("solve_spd solves and regularizes") {
    Matrix a(2, 2);
    a(0, 0) = 4.0;
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    a(1, 1) = 3.0;
    const std::vector<double> x = solve_spd(a, {1.0, 2.0});
    CHECK(4.0 * x[0] + 1.0 * x[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(1.0 * x[0] + 3.0 * x[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("log_gamma against frozen references") {
    // reference values from standard 15-digit tables
    CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(log_gamma(0.5) == doctest::Approx(0.57236494292470009).epsilon(1e-12));
    CHECK(log_gamma(5.0) == doctest::Approx(3.1780538303479458).epsilon(1e-12));
    CHECK(log_gamma(12.3) == doctest::Approx(18.238983407092245).epsilon(1e-12));
    CHECK(log_gamma(0.07) == doctest::Approx(2.6227537606032154).epsilon(1e-12));
    // agreement with the C library as an independent route
    for (double x : {0.12, 0.9, 1.7, 3.4, 8.8, 25.0, 140.0, 2.5e6}) {
        CHECK(log_gamma(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-10));
    }
}

TEST_CASE("digamma against frozen references") {
    const double euler_gamma = 0.57721566490153286;
    CHECK(digamma(1.0) == doctest::Approx(-euler_gamma).epsilon(1e-10));
    CHECK(digamma(0.5) == doctest::Approx(-euler_gamma - 2.0 * std::log(2.0)).epsilon(1e-10));
    CHECK(digamma(2.0) == doctest::Approx(1.0 - euler_gamma).epsilon(1e-10));
    CHECK(digamma(10.0) == doctest::Approx(2.2517525890667211).epsilon(1e-10));
    CHECK(digamma(0.25) == doctest::Approx(-4.2274535333762655).epsilon(1e-10));
    // digamma is the derivative of log_gamma: central differences
    for (double x : {0.3, 1.1, 2.6, 7.5, 33.0}) {
        const double h = 1e-6 * std::max(1.0, x);
        const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h);
        CHECK(digamma(x) == doctest::Approx(fd).epsilon(1e-6));
    }
}
