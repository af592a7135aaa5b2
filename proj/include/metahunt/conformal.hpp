#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "metahunt/errors.hpp"
#include "metahunt/pipeline.hpp"
#include "metahunt/rng.hpp"
#include "metahunt/study.hpp"

namespace metahunt {

/// Scalar functional Phi of a grid-sampled function: evaluation at a grid
/// point, the grid-weighted mean (the ATE functional), or a user-supplied
/// table of grid weights.
class Functional {
public:
    enum class Kind { point_eval, mean_over_grid, table };

    static Functional point_index(std::size_t j) {
        Functional f;
        f.kind_ = Kind::point_eval;
        f.index_ = j;
        return f;
    }

    /// Evaluation at the grid point nearest to x (lowest index on ties).
    static Functional point_at(const EvalGrid& grid, double x) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double d = std::fabs(grid.points()[j] - x);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        return point_index(best);
    }

    static Functional mean_over_grid() {
        Functional f;
        f.kind_ = Kind::mean_over_grid;
        return f;
    }

    static Functional table(std::vector<double> weights) {
        double sum = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw ArgumentError("Functional: table weights must be >= 0");
            sum += w;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw ArgumentError("Functional: table weights must sum to 1");
        Functional f;
        f.kind_ = Kind::table;
        f.table_ = std::move(weights);
        return f;
    }

    double evaluate(const FuncSample& f, const EvalGrid& grid) const {
        check_aligned(f, grid, "Functional::evaluate");
        switch (kind_) {
        case Kind::point_eval:
            if (index_ >= grid.size()) throw ArgumentError("Functional: point index out of range");
            return f.values[index_];
        case Kind::mean_over_grid: {
            double s = 0.0;
            for (std::size_t j = 0; j < grid.size(); ++j) s += grid.weights()[j] * f.values[j];
            return s;
        }
        case Kind::table: {
            if (table_.size() != grid.size())
                throw ArgumentError("Functional: table length does not match grid");
            double s = 0.0;
            for (std::size_t j = 0; j < grid.size(); ++j) s += table_[j] * f.values[j];
            return s;
        }
        }
        throw ArgumentError("Functional: unknown kind");
    }

    Kind kind() const { return kind_; }
    std::size_t index() const { return index_; }

private:
    Kind kind_ = Kind::mean_over_grid;
    std::size_t index_ = 0;
    std::vector<double> table_;
};

/// Interval [center - half_width, center + half_width] at miscoverage
/// level alpha. half_width may be +infinity (quantile index overflow).
struct PredictionInterval {
    double center = 0.0;
    double half_width = 0.0;
    double alpha = 0.0;
    bool used_fallback = false; // weighted variant fell back to unweighted

    double lo() const { return center - half_width; }
    double hi() const { return center + half_width; }
    bool covers(double value) const { return value >= lo() && value <= hi(); }
};

/// The ceil((1-alpha)(m_cal+1))-th smallest residual; +infinity when the
/// index overflows the calibration set (the interval is the whole line).
inline double conformal_quantile(std::vector<double> residuals, double alpha) {
    if (residuals.empty()) throw ArgumentError("conformal_quantile: empty residuals");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ArgumentError("conformal_quantile: alpha must be in (0,1)");
    const std::size_t m = residuals.size();
    const std::size_t idx = std::size_t(std::ceil((1.0 - alpha) * double(m + 1)));
    if (idx > m) return std::numeric_limits<double>::infinity();
    std::nth_element(residuals.begin(), residuals.begin() + (idx - 1), residuals.end());
    return residuals[idx - 1];
}

/// Weighted conformal quantile. The target carries its own mass w0 =
/// max_i w_i placed at +infinity; after normalizing {w_i} u {w0}, returns
/// the smallest residual r with cumulative mass(residuals <= r) >= 1-alpha,
/// else the +infinity sentinel.
inline double weighted_quantile(const std::vector<double>& residuals,
                                const std::vector<double>& weights, double alpha) {
    if (residuals.empty()) throw ArgumentError("weighted_quantile: empty residuals");
    if (weights.size() != residuals.size())
        throw ArgumentError("weighted_quantile: weight count mismatch");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ArgumentError("weighted_quantile: alpha must be in (0,1)");
    double total = 0.0, w_max = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ArgumentError("weighted_quantile: negative weight");
        total += w;
        w_max = std::max(w_max, w);
    }
    if (total <= 0.0) throw ArgumentError("weighted_quantile: all weights are zero");
    total += w_max; // target mass at +infinity

    std::vector<std::size_t> order(residuals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return residuals[a] < residuals[b]; });

    double mass = 0.0;
    for (std::size_t i : order) {
        mass += weights[i] / total;
        if (mass >= 1.0 - alpha) return residuals[i];
    }
    return std::numeric_limits<double>::infinity();
}

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> calibration;
};

/// Seeded random split with the given training fraction. Requires at least
/// two calibration studies.
inline SplitIndices split_studies(std::size_t m, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ArgumentError("split_studies: train fraction must be in (0,1)");
    std::size_t m_tr = std::size_t(std::floor(train_fraction * double(m) + 0.5));
    m_tr = std::max<std::size_t>(m_tr, 1);
    if (m < m_tr + 2)
        throw ArgumentError("split_studies: fewer than 2 calibration studies after split");
    Rng rng = Rng(seed).split(0x73706c6974ull); // "split" stream
    const std::vector<std::size_t> perm = random_permutation(m, rng);
    SplitIndices out;
    out.train.assign(perm.begin(), perm.begin() + m_tr);
    out.calibration.assign(perm.begin() + m_tr, perm.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.calibration.begin(), out.calibration.end());
    return out;
}

namespace detail {

struct SplitFit {
    TrainedPipeline pipeline;
    std::vector<std::size_t> calibration;
    std::vector<FuncSample> cal_predictions; // f-tilde^{(i)} per calibration study
};

inline SplitFit split_fit(const std::vector<StudyRecord>& studies, const EvalGrid& grid,
                          const PipelineConfig& config, const SplitIndices& split) {
    std::vector<StudyRecord> train;
    train.reserve(split.train.size());
    for (std::size_t i : split.train) train.push_back(studies[i]);
    TrainedPipeline pipeline = fit_pipeline(train, grid, config);
    std::vector<FuncSample> preds;
    preds.reserve(split.calibration.size());
    for (std::size_t i : split.calibration)
        preds.push_back(predict_function(pipeline, studies[i].covariates));
    return SplitFit{std::move(pipeline), split.calibration, std::move(preds)};
}

inline std::vector<double> functional_residuals(const std::vector<StudyRecord>& studies,
                                                const SplitFit& fit, const Functional& phi,
                                                const EvalGrid& grid) {
    std::vector<double> r;
    r.reserve(fit.calibration.size());
    for (std::size_t j = 0; j < fit.calibration.size(); ++j) {
        const double observed = phi.evaluate(studies[fit.calibration[j]].f_hat, grid);
        const double predicted = phi.evaluate(fit.cal_predictions[j], grid);
        r.push_back(std::fabs(observed - predicted));
    }
    return r;
}

/// Gaussian kernel weights exp(-||W_i - W_0||^2 / (2h^2)) for the
/// calibration studies, h = multiplier * median pairwise distance among all
/// input studies' covariates. Returns empty when h degenerates to zero.
inline std::vector<double> kernel_weights(const std::vector<StudyRecord>& studies,
                                          const std::vector<std::size_t>& calibration,
                                          const std::vector<double>& w0,
                                          double bandwidth_multiplier) {
    std::vector<double> pairwise;
    for (std::size_t i = 0; i < studies.size(); ++i)
        for (std::size_t j = i + 1; j < studies.size(); ++j) {
            double d2 = 0.0;
            for (std::size_t a = 0; a < w0.size(); ++a) {
                const double d = studies[i].covariates[a] - studies[j].covariates[a];
                d2 += d * d;
            }
            pairwise.push_back(std::sqrt(d2));
        }
    if (pairwise.empty()) return {};
    std::sort(pairwise.begin(), pairwise.end());
    const std::size_t n = pairwise.size();
    const double h_med = (n % 2 == 1) ? pairwise[n / 2]
                                      : 0.5 * (pairwise[n / 2 - 1] + pairwise[n / 2]);
    const double h = bandwidth_multiplier * h_med;
    if (!(h > 0.0)) return {};
    std::vector<double> w;
    w.reserve(calibration.size());
    for (std::size_t i : calibration) {
        double d2 = 0.0;
        for (std::size_t a = 0; a < w0.size(); ++a) {
            const double d = studies[i].covariates[a] - w0[a];
            d2 += d * d;
        }
        w.push_back(std::exp(-d2 / (2.0 * h * h)));
    }
    return w;
}

} // namespace detail

/// Algorithm 2 (split conformal), generalized to any Lipschitz functional:
/// conformity scores r_i = |Phi(f-hat_i) - Phi(f-tilde_i)| on the
/// calibration studies, interval centered at Phi of the target prediction.
inline PredictionInterval split_conformal(const std::vector<StudyRecord>& studies,
                                          const std::vector<double>& w0, const Functional& phi,
                                          double alpha, double split_fraction, std::uint64_t seed,
                                          const PipelineConfig& config, const EvalGrid& grid) {
    const SplitIndices split = split_studies(studies.size(), split_fraction, seed);
    const detail::SplitFit fit = detail::split_fit(studies, grid, config, split);
    const std::vector<double> residuals = detail::functional_residuals(studies, fit, phi, grid);

    PredictionInterval out;
    out.alpha = alpha;
    out.center = phi.evaluate(predict_function(fit.pipeline, w0), grid);
    out.half_width = conformal_quantile(residuals, alpha);
    return out;
}

/// K-fold cross-conformal with an explicit fold assignment: each study's
/// residual comes from the pipeline trained on the other folds; the
/// quantile pools all residuals and the center averages the fold centers.
inline PredictionInterval cross_conformal_with_folds(const std::vector<StudyRecord>& studies,
                                                     const std::vector<double>& w0,
                                                     const Functional& phi, double alpha,
                                                     const std::vector<int>& fold_of,
                                                     const PipelineConfig& config,
                                                     const EvalGrid& grid) {
    if (fold_of.size() != studies.size())
        throw ArgumentError("cross_conformal: fold assignment size mismatch");
    const int folds = fold_of.empty() ? 0 : *std::max_element(fold_of.begin(), fold_of.end()) + 1;
    if (folds < 2) throw ArgumentError("cross_conformal: folds must be >= 2");

    std::vector<double> residuals;
    double center_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
        SplitIndices split;
        for (std::size_t i = 0; i < studies.size(); ++i) {
            if (fold_of[i] == f)
                split.calibration.push_back(i);
            else
                split.train.push_back(i);
        }
        if (split.calibration.empty())
            throw ArgumentError("cross_conformal: fold " + std::to_string(f) + " is empty");
        detail::SplitFit fit = [&] {
            try {
                return detail::split_fit(studies, grid, config, split);
            } catch (const Error& e) {
                throw FitError("cross_conformal: fold " + std::to_string(f) + ": " + e.what());
            }
        }();
        const std::vector<double> r = detail::functional_residuals(studies, fit, phi, grid);
        residuals.insert(residuals.end(), r.begin(), r.end());
        center_sum += phi.evaluate(predict_function(fit.pipeline, w0), grid);
    }

    PredictionInterval out;
    out.alpha = alpha;
    out.center = center_sum / double(folds);
    out.half_width = conformal_quantile(residuals, alpha);
    return out;
}

inline PredictionInterval cross_conformal(const std::vector<StudyRecord>& studies,
                                          const std::vector<double>& w0, const Functional& phi,
                                          double alpha, int folds, std::uint64_t seed,
                                          const PipelineConfig& config, const EvalGrid& grid) {
    if (folds < 2) throw ArgumentError("cross_conformal: folds must be >= 2");
    if (std::size_t(folds) > studies.size())
        throw ArgumentError("cross_conformal: more folds than studies");
    Rng rng = Rng(seed).split(0x63726f7373ull); // "cross" stream
    const std::vector<std::size_t> perm = random_permutation(studies.size(), rng);
    std::vector<int> fold_of(studies.size());
    for (std::size_t pos = 0; pos < perm.size(); ++pos)
        fold_of[perm[pos]] = int(pos % std::size_t(folds));
    return cross_conformal_with_folds(studies, w0, phi, alpha, fold_of, config, grid);
}

/// Split conformal with Gaussian-kernel weighted calibration residuals,
/// h = bandwidth_multiplier * median pairwise covariate distance (default
/// multiplier 3). Falls back to the unweighted quantile when all
/// covariates coincide, flagged in the result.
inline PredictionInterval weighted_conformal(const std::vector<StudyRecord>& studies,
                                             const std::vector<double>& w0, const Functional& phi,
                                             double alpha, double bandwidth_multiplier,
                                             double split_fraction, std::uint64_t seed,
                                             const PipelineConfig& config, const EvalGrid& grid) {
    const SplitIndices split = split_studies(studies.size(), split_fraction, seed);
    const detail::SplitFit fit = detail::split_fit(studies, grid, config, split);
    const std::vector<double> residuals = detail::functional_residuals(studies, fit, phi, grid);
    const std::vector<double> weights =
        detail::kernel_weights(studies, split.calibration, w0, bandwidth_multiplier);

    PredictionInterval out;
    out.alpha = alpha;
    out.center = phi.evaluate(predict_function(fit.pipeline, w0), grid);
    if (weights.empty()) {
        out.half_width = conformal_quantile(residuals, alpha);
        out.used_fallback = true;
    } else {
        out.half_width = weighted_quantile(residuals, weights, alpha);
    }
    return out;
}

/// Pointwise interval curve over the whole grid for one target W0: the
/// quantile is computed per grid point from the calibration residual
/// curves. This is the machinery behind the coverage experiment.
struct ConformalCurve {
    std::vector<double> centers;
    std::vector<double> half_widths;
    double alpha = 0.0;
};

inline ConformalCurve split_conformal_curve(const std::vector<StudyRecord>& studies,
                                            const std::vector<double>& w0, double alpha,
                                            double split_fraction, std::uint64_t seed,
                                            const PipelineConfig& config, const EvalGrid& grid) {
    const SplitIndices split = split_studies(studies.size(), split_fraction, seed);
    const detail::SplitFit fit = detail::split_fit(studies, grid, config, split);

    ConformalCurve out;
    out.alpha = alpha;
    out.centers = predict_function(fit.pipeline, w0).values;
    out.half_widths.resize(grid.size());
    std::vector<double> r(fit.calibration.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (std::size_t c = 0; c < fit.calibration.size(); ++c)
            r[c] = std::fabs(studies[fit.calibration[c]].f_hat.values[j] -
                             fit.cal_predictions[c].values[j]);
        out.half_widths[j] = conformal_quantile(r, alpha);
    }
    return out;
}

/// Same split and pipeline for many targets: fit once, reuse the residual
/// quantiles, and only the centers vary with W0.
struct ConformalCurveBatch {
    std::vector<double> half_widths; // shared across targets
    TrainedPipeline pipeline;
    double alpha = 0.0;
};

inline ConformalCurveBatch split_conformal_curve_batch(const std::vector<StudyRecord>& studies,
                                                       double alpha, double split_fraction,
                                                       std::uint64_t seed,
                                                       const PipelineConfig& config,
                                                       const EvalGrid& grid) {
    const SplitIndices split = split_studies(studies.size(), split_fraction, seed);
    detail::SplitFit fit = detail::split_fit(studies, grid, config, split);

    std::vector<double> half_widths(grid.size());
    std::vector<double> r(fit.calibration.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (std::size_t c = 0; c < fit.calibration.size(); ++c)
            r[c] = std::fabs(studies[fit.calibration[c]].f_hat.values[j] -
                             fit.cal_predictions[c].values[j]);
        half_widths[j] = conformal_quantile(r, alpha);
    }
    return ConformalCurveBatch{std::move(half_widths), std::move(fit.pipeline), alpha};
}

/// Cross-conformal analogue of the pointwise curve: per-fold residual
/// curves pooled per grid point, centers averaged across folds.
inline ConformalCurve cross_conformal_curve(const std::vector<StudyRecord>& studies,
                                            const std::vector<double>& w0, double alpha,
                                            int folds, std::uint64_t seed,
                                            const PipelineConfig& config, const EvalGrid& grid) {
    if (folds < 2) throw ArgumentError("cross_conformal_curve: folds must be >= 2");
    if (std::size_t(folds) > studies.size())
        throw ArgumentError("cross_conformal_curve: more folds than studies");
    Rng rng = Rng(seed).split(0x63726f7373ull);
    const std::vector<std::size_t> perm = random_permutation(studies.size(), rng);
    std::vector<int> fold_of(studies.size());
    for (std::size_t pos = 0; pos < perm.size(); ++pos)
        fold_of[perm[pos]] = int(pos % std::size_t(folds));

    ConformalCurve out;
    out.alpha = alpha;
    out.centers.assign(grid.size(), 0.0);
    std::vector<std::vector<double>> residuals(grid.size());
    for (int f = 0; f < folds; ++f) {
        SplitIndices split;
        for (std::size_t i = 0; i < studies.size(); ++i) {
            if (fold_of[i] == f)
                split.calibration.push_back(i);
            else
                split.train.push_back(i);
        }
        const detail::SplitFit fit = detail::split_fit(studies, grid, config, split);
        for (std::size_t c = 0; c < fit.calibration.size(); ++c)
            for (std::size_t j = 0; j < grid.size(); ++j)
                residuals[j].push_back(std::fabs(studies[fit.calibration[c]].f_hat.values[j] -
                                                 fit.cal_predictions[c].values[j]));
        const FuncSample center = predict_function(fit.pipeline, w0);
        for (std::size_t j = 0; j < grid.size(); ++j)
            out.centers[j] += center.values[j] / double(folds);
    }
    out.half_widths.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
        out.half_widths[j] = conformal_quantile(residuals[j], alpha);
    return out;
}

/// Weighted pointwise curve: one split fit, kernel weights shared across
/// grid points, weighted quantile per point.
inline ConformalCurve weighted_conformal_curve(const std::vector<StudyRecord>& studies,
                                               const std::vector<double>& w0, double alpha,
                                               double bandwidth_multiplier, double split_fraction,
                                               std::uint64_t seed, const PipelineConfig& config,
                                               const EvalGrid& grid) {
    const SplitIndices split = split_studies(studies.size(), split_fraction, seed);
    const detail::SplitFit fit = detail::split_fit(studies, grid, config, split);
    const std::vector<double> weights =
        detail::kernel_weights(studies, split.calibration, w0, bandwidth_multiplier);

    ConformalCurve out;
    out.alpha = alpha;
    out.centers = predict_function(fit.pipeline, w0).values;
    out.half_widths.resize(grid.size());
    std::vector<double> r(fit.calibration.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (std::size_t c = 0; c < fit.calibration.size(); ++c)
            r[c] = std::fabs(studies[fit.calibration[c]].f_hat.values[j] -
                             fit.cal_predictions[c].values[j]);
        out.half_widths[j] =
            weights.empty() ? conformal_quantile(r, alpha) : weighted_quantile(r, weights, alpha);
    }
    return out;
}

/// One (x, truth, interval) observation for coverage accounting.
struct CoverageRecord {
    double x = 0.0;
    double truth = 0.0;
    double center = 0.0;
    double half_width = 0.0;
};

struct CoverageRow {
    double x_lo = 0.0;
    double x_hi = 0.0;
    std::size_t n = 0;
    double coverage = 0.0;
    double mean_length = 0.0;
};

struct CoverageReport {
    std::vector<CoverageRow> per_bin;
    std::size_t n = 0;
    double coverage = 0.0;
    double mean_length = 0.0;
};

/// Aggregates covered/length per x-bin and overall; reproduces the
/// coverage-versus-x tables of the simulation study.
inline CoverageReport evaluate_coverage(const std::vector<CoverageRecord>& records, int bins = 20) {
    CoverageReport rep;
    if (records.empty()) return rep;
    if (bins < 1) throw ArgumentError("evaluate_coverage: bins must be >= 1");

    double x_lo = records[0].x, x_hi = records[0].x;
    for (const auto& r : records) {
        x_lo = std::min(x_lo, r.x);
        x_hi = std::max(x_hi, r.x);
    }
    if (!(x_hi > x_lo)) {
        x_hi = x_lo + 1.0;
    }
    const double width = (x_hi - x_lo) / double(bins);
    std::vector<std::size_t> count(bins, 0), covered(bins, 0);
    std::vector<double> length(bins, 0.0);
    std::size_t covered_total = 0;
    double length_total = 0.0;
    for (const auto& r : records) {
        int b = int((r.x - x_lo) / width);
        b = std::clamp(b, 0, bins - 1);
        const bool cov = std::fabs(r.truth - r.center) <= r.half_width;
        ++count[b];
        covered[b] += cov ? 1 : 0;
        length[b] += 2.0 * r.half_width;
        covered_total += cov ? 1 : 0;
        length_total += 2.0 * r.half_width;
    }
    for (int b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        CoverageRow row;
        row.x_lo = x_lo + b * width;
        row.x_hi = x_lo + (b + 1) * width;
        row.n = count[b];
        row.coverage = double(covered[b]) / double(count[b]);
        row.mean_length = length[b] / double(count[b]);
        rep.per_bin.push_back(row);
    }
    rep.n = records.size();
    rep.coverage = double(covered_total) / double(records.size());
    rep.mean_length = length_total / double(records.size());
    return rep;
}

} // namespace metahunt
