#pragma once

#include <optional>
#include <vector>

#include "metahunt/function_space.hpp"
#include "metahunt/weight_estimation.hpp"

namespace metahunt {

/// One study's observables: covariates W_i plus its estimated function.
/// The oracle fields are populated only by the simulator.
struct StudyRecord {
    int id = 0;
    std::vector<double> covariates; // W_i
    FuncSample f_hat;
    std::optional<FuncSample> f_true;
    std::optional<SimplexWeights> pi_true;
};

inline std::vector<FuncSample> extract_f_hat(const std::vector<StudyRecord>& studies) {
    std::vector<FuncSample> out;
    out.reserve(studies.size());
    for (const auto& s : studies) out.push_back(s.f_hat);
    return out;
}

} // namespace metahunt
