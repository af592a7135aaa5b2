#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "metahunt/basis_hunting.hpp"
#include "metahunt/pipeline.hpp"
#include "metahunt/rng.hpp"
#include "metahunt/weight_estimation.hpp"

namespace metahunt {

enum class KSelectionMethod { elbow, cv };

struct KSelectionReport {
    std::vector<int> k_values;
    std::vector<double> reconstruction_errors; // E(K) per candidate
    std::vector<double> cv_errors;             // empty for elbow
    int chosen_k = 0;
    KSelectionMethod method = KSelectionMethod::elbow;
};

/// Reconstruction error E(K) along the greedy prefix chain of a single
/// d-fSPA run at k_max, with the elbow rule: pick the smallest K whose
/// next relative error drop (E(K) - E(K+1)) / max(E(1), eps) falls below
/// the threshold. The greedy prefix property makes E(K) non-increasing.
inline KSelectionReport elbow_curve(const std::vector<FuncSample>& functions, const EvalGrid& grid,
                                    int k_max, const DenoiseParams& params,
                                    double threshold = 0.05) {
    if (k_max < 1) throw ArgumentError("elbow_curve: k_max must be >= 1");
    BasisSet full = dfspa(functions, k_max, params, grid);

    KSelectionReport report;
    report.method = KSelectionMethod::elbow;
    const int found = int(full.size());
    for (int k = 1; k <= found; ++k) {
        std::vector<FuncSample> prefix(full.bases.begin(), full.bases.begin() + k);
        std::vector<int> src(full.source_indices.begin(), full.source_indices.begin() + k);
        BasisSet basis(std::move(prefix), std::move(src), grid);
        report.k_values.push_back(k);
        report.reconstruction_errors.push_back(reconstruction_error(functions, basis, grid));
    }

    const double denom = std::max(report.reconstruction_errors.front(), 1e-12);
    report.chosen_k = found;
    for (int k = 1; k < found; ++k) {
        const double drop =
            (report.reconstruction_errors[k - 1] - report.reconstruction_errors[k]) / denom;
        if (drop < threshold) {
            report.chosen_k = k;
            break;
        }
    }
    return report;
}

namespace detail {

inline std::vector<int> make_fold_assignment(std::size_t m, int folds, std::uint64_t seed) {
    Rng rng = Rng(seed).split(0x666f6c64ull); // "fold" stream
    const std::vector<std::size_t> perm = random_permutation(m, rng);
    std::vector<int> fold_of(m, 0);
    for (std::size_t pos = 0; pos < m; ++pos)
        fold_of[perm[pos]] = int(pos % std::size_t(folds));
    return fold_of;
}

} // namespace detail

/// Cross-validation over the entire estimation and prediction pipeline:
/// for each candidate K and fold, fit on the training studies, predict each
/// held-out study's function from its covariates, and score by L2 distance
/// to the observed estimate. Ties go to the smaller K.
inline KSelectionReport cv_select_k(const std::vector<StudyRecord>& studies, const EvalGrid& grid,
                                    const std::vector<int>& k_candidates, int folds,
                                    PipelineConfig config, std::uint64_t seed) {
    if (folds < 2) throw ArgumentError("cv_select_k: folds must be >= 2");
    if (k_candidates.empty()) throw ArgumentError("cv_select_k: no candidates");
    const std::size_t m = studies.size();
    const int k_max = *std::max_element(k_candidates.begin(), k_candidates.end());

    const std::vector<int> fold_of = detail::make_fold_assignment(m, folds, seed);
    for (int f = 0; f < folds; ++f) {
        std::size_t train = 0;
        for (std::size_t i = 0; i < m; ++i)
            if (fold_of[i] != f) ++train;
        if (train < std::size_t(k_max))
            throw ArgumentError("cv_select_k: fold " + std::to_string(f) + " leaves only " +
                                std::to_string(train) + " training studies for K=" +
                                std::to_string(k_max));
    }

    KSelectionReport report;
    report.method = KSelectionMethod::cv;
    for (int k : k_candidates) {
        config.k = k;
        double err_sum = 0.0;
        std::size_t err_n = 0;
        for (int f = 0; f < folds; ++f) {
            std::vector<StudyRecord> train;
            std::vector<std::size_t> held;
            for (std::size_t i = 0; i < m; ++i) {
                if (fold_of[i] == f)
                    held.push_back(i);
                else
                    train.push_back(studies[i]);
            }
            if (held.empty()) continue;
            TrainedPipeline pipe = [&] {
                try {
                    return fit_pipeline(train, grid, config);
                } catch (const Error& e) {
                    throw FitError("cv_select_k: fold " + std::to_string(f) + ", K=" +
                                   std::to_string(k) + ": " + e.what());
                }
            }();
            for (std::size_t i : held) {
                const FuncSample pred = predict_function(pipe, studies[i].covariates);
                err_sum += l2_dist(pred, studies[i].f_hat, grid);
                ++err_n;
            }
        }
        report.k_values.push_back(k);
        report.cv_errors.push_back(err_sum / double(err_n));
    }

    // reconstruction errors on the full data complete the report; a
    // degenerate full-data fit at k_max only blanks this column
    try {
        const std::vector<FuncSample> funcs = extract_f_hat(studies);
        const DenoiseParams dn = config.denoise_params
                                     ? *config.denoise_params
                                     : default_tuning(funcs, grid, int(funcs.size()));
        KSelectionReport elbow = elbow_curve(funcs, grid, k_max, dn, config.elbow_threshold);
        for (int k : report.k_values) {
            const double err = (std::size_t(k) <= elbow.reconstruction_errors.size())
                                   ? elbow.reconstruction_errors[std::size_t(k) - 1]
                                   : std::numeric_limits<double>::quiet_NaN();
            report.reconstruction_errors.push_back(err);
        }
    } catch (const Error&) {
        report.reconstruction_errors.assign(report.k_values.size(),
                                            std::numeric_limits<double>::quiet_NaN());
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < report.cv_errors.size(); ++i) {
        if (report.cv_errors[i] < report.cv_errors[best] ||
            (report.cv_errors[i] == report.cv_errors[best] &&
             report.k_values[i] < report.k_values[best]))
            best = i;
    }
    report.chosen_k = report.k_values[best];
    return report;
}

} // namespace metahunt
