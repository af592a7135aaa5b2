#pragma once

#include <cmath>
#include <vector>

#include "metahunt/function_space.hpp"
#include "metahunt/rng.hpp"

namespace mh_test {

inline metahunt::EvalGrid three_point_grid() {
    return metahunt::EvalGrid::uniform({-1.0, 0.0, 1.0});
}

inline metahunt::EvalGrid random_grid(metahunt::Rng& rng, std::size_t g, double sd = 5.0) {
    std::vector<double> pts(g);
    for (auto& x : pts) x = rng.normal(0.0, sd);
    std::sort(pts.begin(), pts.end());
    return metahunt::EvalGrid::uniform(std::move(pts));
}

inline metahunt::FuncSample random_func(metahunt::Rng& rng, const metahunt::EvalGrid& grid,
                                        double scale = 1.0) {
    std::vector<double> v(grid.size());
    for (auto& x : v) x = rng.normal(0.0, scale);
    return metahunt::FuncSample(grid, std::move(v));
}

/// Smooth random function: a + b x + c sin(d x), less adversarial than
/// white noise for hull-geometry tests.
inline metahunt::FuncSample random_smooth_func(metahunt::Rng& rng, const metahunt::EvalGrid& grid,
                                               double scale = 1.0) {
    const double a = rng.normal(0.0, scale);
    const double b = rng.normal(0.0, scale / 3.0);
    const double c = rng.normal(0.0, scale);
    const double d = rng.uniform(0.2, 1.5);
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double x = grid.points()[j];
        v[j] = a + b * x + c * std::sin(d * x);
    }
    return metahunt::FuncSample(grid, std::move(v));
}

} // namespace mh_test
