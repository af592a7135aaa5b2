// End-to-end walkthrough: simulate studies, recover the basis, fit the
// weight model, predict a new population's function, and wrap one summary
// in a split-conformal interval.
#include <cstdio>

#include "metahunt/metahunt.hpp"

using namespace metahunt;

int main() {
    GenerativeConfig cfg = paper_defaults();
    cfg.m = 60;
    cfg.seed = 7;
    auto [grid, sims] = generate(cfg, 400);
    const std::vector<StudyRecord> studies = to_study_records(sims);

    // pick K from the reconstruction-error elbow
    const std::vector<FuncSample> funcs = extract_f_hat(studies);
    const DenoiseParams tuning = default_tuning(funcs, grid, cfg.m);
    const KSelectionReport elbow = elbow_curve(funcs, grid, 8, tuning);
    std::printf("elbow-selected K = %d\n", elbow.chosen_k);

    PipelineConfig pc;
    pc.k = elbow.chosen_k;
    const TrainedPipeline pipeline = fit_pipeline(studies, grid, pc);

    const std::vector<double> w0{0.5, -0.2, 1.0};
    const FuncSample prediction = predict_function(pipeline, w0);
    std::printf("predicted f(x) at x=%.2f: %.3f\n", grid.points()[200], prediction.values[200]);

    const PredictionInterval ate = split_conformal(
        studies, w0, Functional::mean_over_grid(), 0.05, 0.7, cfg.seed, pc, grid);
    std::printf("ATE interval: [%.3f, %.3f]\n", ate.lo(), ate.hi());
    return 0;
}
