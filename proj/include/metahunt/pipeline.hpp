#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metahunt/basis_hunting.hpp"
#include "metahunt/errors.hpp"
#include "metahunt/study.hpp"
#include "metahunt/weight_estimation.hpp"
#include "metahunt/weight_model.hpp"

namespace metahunt {

enum class WeightModelKind { dirichlet, logratio };

/// Everything needed to reproduce one end-to-end fit.
struct PipelineConfig {
    int k = 0;                                 // number of basis functions K-hat
    std::optional<DenoiseParams> denoise_params; // nullopt -> heuristic tuning
    WeightModelKind weight_model = WeightModelKind::dirichlet;
    FeatureKind feature_kind = FeatureKind::identity;
    int feature_degree = 1;
    bool feature_intercept = true;
    double ridge_lambda = 1e-8;   // log-ratio model
    double elbow_threshold = 0.05;
    double alpha_floor = 1e-6;
    double alpha_cap = 1e8;
    int dirichlet_max_iterations = 5000;

    FeatureMap make_feature_map() const {
        return feature_kind == FeatureKind::identity
                   ? FeatureMap::identity(feature_intercept)
                   : FeatureMap::polynomial(feature_degree, feature_intercept);
    }
};

/// Recovered basis + fitted weight model + configuration: the prediction
/// rule mapping study-level covariates to a function on the grid.
struct TrainedPipeline {
    BasisSet basis;
    WeightModelParams weight_params;
    EvalGrid grid;
    PipelineConfig config;
    DenoiseParams used_denoise; // resolved tuning actually applied

    TrainedPipeline(BasisSet b, WeightModelParams wp, EvalGrid g, PipelineConfig cfg,
                    DenoiseParams used)
        : basis(std::move(b)), weight_params(std::move(wp)), grid(std::move(g)),
          config(cfg), used_denoise(used) {
        if (basis.size() != weight_model_k(weight_params))
            throw ArgumentError("TrainedPipeline: basis count does not match weight model");
        if (basis.grid.hash() != grid.hash())
            throw ArgumentError("TrainedPipeline: basis grid does not match pipeline grid");
    }
};

/// d-fSPA, per-study hull projection, then weight-model fit.
inline TrainedPipeline fit_pipeline(const std::vector<StudyRecord>& studies, const EvalGrid& grid,
                                    const PipelineConfig& config) {
    if (studies.empty()) throw ArgumentError("fit_pipeline: no studies");
    if (config.k < 1) throw ArgumentError("fit_pipeline: config.k must be >= 1");

    const std::vector<FuncSample> funcs = extract_f_hat(studies);
    const DenoiseParams dn = config.denoise_params
                                 ? *config.denoise_params
                                 : default_tuning(funcs, grid, int(funcs.size()));
    BasisSet basis = dfspa(funcs, config.k, dn, grid);

    std::vector<std::vector<double>> w;
    std::vector<SimplexWeights> pi_hat;
    w.reserve(studies.size());
    pi_hat.reserve(studies.size());
    for (const auto& s : studies) {
        w.push_back(s.covariates);
        pi_hat.push_back(project_to_hull(s.f_hat, basis, grid).weights);
    }

    WeightModelParams params =
        config.weight_model == WeightModelKind::dirichlet
            ? WeightModelParams(fit_dirichlet(w, pi_hat, config.make_feature_map(),
                                              config.alpha_floor, config.alpha_cap,
                                              config.dirichlet_max_iterations))
            : WeightModelParams(
                  fit_logratio(w, pi_hat, config.make_feature_map(), config.ridge_lambda));

    return TrainedPipeline(std::move(basis), std::move(params), grid, config, dn);
}

/// f-tilde(.; W0) = sum_k pi-tilde_k g-hat_k on the pipeline grid.
inline FuncSample predict_function(const TrainedPipeline& pipeline,
                                   const std::vector<double>& w0) {
    const SimplexWeights pi = predict_weights(pipeline.weight_params, w0);
    return func_combine(pipeline.basis.bases, pi.w);
}

} // namespace metahunt
