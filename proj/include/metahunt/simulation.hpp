#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "metahunt/conformal.hpp"
#include "metahunt/errors.hpp"
#include "metahunt/function_space.hpp"
#include "metahunt/parallel.hpp"
#include "metahunt/pipeline.hpp"
#include "metahunt/rng.hpp"
#include "metahunt/study.hpp"
#include "metahunt/weight_estimation.hpp"

namespace metahunt {

/// Two-layer hierarchical generative model of the simulation study.
struct GenerativeConfig {
    int m = 100;
    int n_per_study = 200;
    Matrix beta;              // 4 x 4, rows = (intercept, W1, W2, W3), cols = basis
    int w_dim = 3;            // W ~ N(0, I_3)
    double x_sd = 5.0;        // X ~ N(0, 5^2)
    double noise_sd = 5.0;    // Y | X ~ N(f(X), 5^2)
    double dirichlet_scale = 20.0;
    std::uint64_t seed = 1;
};

inline constexpr int kPaperBasisCount = 4;

/// The four closed-form basis functions of the simulation design.
inline double paper_basis_value(int k, double x) {
    switch (k) {
    case 0: return -2.0 * x + 3.0;
    case 1: return x * x / 4.0;
    case 2: return 10.0 * std::sin(x / 3.0);
    case 3: return -2.0 * std::fabs(x + 4.0);
    }
    throw ArgumentError("paper_basis_value: k out of range");
}

inline FuncSample paper_basis_sample(int k, const EvalGrid& grid) {
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) v[j] = paper_basis_value(k, grid.points()[j]);
    return FuncSample(grid, std::move(v));
}

inline BasisSet paper_basis_set(const EvalGrid& grid) {
    std::vector<FuncSample> bases;
    std::vector<int> src;
    for (int k = 0; k < kPaperBasisCount; ++k) {
        bases.push_back(paper_basis_sample(k, grid));
        src.push_back(kAveragedOrigin);
    }
    return BasisSet(std::move(bases), std::move(src), grid);
}

/// The published simulation constants.
inline GenerativeConfig paper_defaults() {
    GenerativeConfig cfg;
    cfg.m = 100;
    cfg.n_per_study = 200;
    cfg.x_sd = 5.0;
    cfg.noise_sd = 5.0;
    cfg.dirichlet_scale = 20.0;
    cfg.beta = Matrix(4, 4);
    const double rows[4][4] = {
        {1.0, -1.0, -1.0, 1.0},
        {2.0, 1.0, -1.0, -1.0},
        {0.0, 4.0, 0.0, 0.0},
        {1.0, 0.0, -3.0, 0.0},
    };
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) cfg.beta(i, j) = rows[i][j];
    return cfg;
}

/// alpha(W) = scale * exp((1, W)' beta).
inline std::vector<double> dirichlet_alpha_at(const GenerativeConfig& cfg,
                                              const std::vector<double>& w) {
    if (w.size() + 1 != cfg.beta.rows)
        throw ArgumentError("dirichlet_alpha_at: covariate dimension mismatch");
    std::vector<double> alpha(cfg.beta.cols);
    for (std::size_t k = 0; k < cfg.beta.cols; ++k) {
        double z = cfg.beta(0, k);
        for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * cfg.beta(j + 1, k);
        alpha[k] = cfg.dirichlet_scale * std::exp(z);
    }
    return alpha;
}

inline SimplexWeights sample_dirichlet(const std::vector<double>& alpha, Rng& rng) {
    return SimplexWeights(rng.dirichlet(alpha));
}

struct SimulatedStudy {
    std::vector<double> covariates; // W in R^3
    SimplexWeights pi_true;
    FuncSample f_true;
    std::vector<double> xs; // individual-level data
    std::vector<double> ys;
    FuncSample f_hat;
};

/// Nadaraya-Watson estimate with Gaussian kernel and rule-of-thumb
/// bandwidth 1.06 sd(x) n^{-1/5}. Grid points farther than 3 bandwidths
/// from every datum fall back to the nearest datum's response.
inline FuncSample estimate_study_function(const std::vector<double>& xs,
                                          const std::vector<double>& ys, const EvalGrid& grid) {
    const std::size_t n = xs.size();
    if (n < 10 || ys.size() != n)
        throw ArgumentError("estimate_study_function: need at least 10 individuals");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= double(n);
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= double(n);
    const double sd = std::sqrt(var);
    const double h = std::max(1.06 * sd * std::pow(double(n), -0.2), 1e-12);

    std::vector<double> out(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double g = grid.points()[j];
        double num = 0.0, den = 0.0, best_d = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = g - xs[i];
            const double ad = std::fabs(d);
            if (ad < best_d) {
                best_d = ad;
                best_i = i;
            }
            const double t = d / h;
            const double w = std::exp(-0.5 * t * t);
            num += w * ys[i];
            den += w;
        }
        out[j] = (best_d > 3.0 * h || den <= 0.0) ? ys[best_i] : num / den;
    }
    return FuncSample(grid, std::move(out));
}

namespace detail {
inline constexpr std::uint64_t kGridStream = 0x67726964ull;   // "grid"
inline constexpr std::uint64_t kStudyStream = 0x73747564ull;  // "stud"
inline constexpr std::uint64_t kTargetStream = 0x74676574ull; // "tget"
} // namespace detail

/// First layer of one study: covariates, mixing weights, oracle function.
inline SimulatedStudy simulate_study_layer1(const GenerativeConfig& cfg, const EvalGrid& grid,
                                            Rng& rng) {
    SimulatedStudy s;
    s.covariates.resize(std::size_t(cfg.w_dim));
    for (auto& w : s.covariates) w = rng.normal();
    s.pi_true = sample_dirichlet(dirichlet_alpha_at(cfg, s.covariates), rng);
    std::vector<double> f(grid.size(), 0.0);
    for (int k = 0; k < kPaperBasisCount; ++k)
        for (std::size_t j = 0; j < grid.size(); ++j)
            f[j] += s.pi_true[std::size_t(k)] * paper_basis_value(k, grid.points()[j]);
    s.f_true = FuncSample(grid, std::move(f));
    return s;
}

/// Full two-layer generation: evaluation grid drawn from the X law, then
/// per-study streams split from the master seed so results are independent
/// of generation order.
inline std::pair<EvalGrid, std::vector<SimulatedStudy>> generate(const GenerativeConfig& cfg,
                                                                 std::size_t grid_size = 1000) {
    if (cfg.m < 1) throw ArgumentError("generate: m must be >= 1");
    const Rng master(cfg.seed);

    Rng grid_rng = master.split(detail::kGridStream);
    std::vector<double> points(grid_size);
    for (auto& x : points) x = grid_rng.normal(0.0, cfg.x_sd);
    std::sort(points.begin(), points.end());
    EvalGrid grid = EvalGrid::uniform(std::move(points));

    std::vector<SimulatedStudy> studies(std::size_t(cfg.m));
    parallel_for(studies.size(), [&](std::size_t i) {
        Rng rng = master.split(detail::kStudyStream, i);
        SimulatedStudy s = simulate_study_layer1(cfg, grid, rng);
        s.xs.resize(std::size_t(cfg.n_per_study));
        s.ys.resize(std::size_t(cfg.n_per_study));
        for (int j = 0; j < cfg.n_per_study; ++j) {
            const double x = rng.normal(0.0, cfg.x_sd);
            double f = 0.0;
            for (int k = 0; k < kPaperBasisCount; ++k)
                f += s.pi_true[std::size_t(k)] * paper_basis_value(k, x);
            s.xs[std::size_t(j)] = x;
            s.ys[std::size_t(j)] = f + rng.normal(0.0, cfg.noise_sd);
        }
        s.f_hat = estimate_study_function(s.xs, s.ys, grid);
        studies[i] = std::move(s);
    });
    return {std::move(grid), std::move(studies)};
}

/// Fresh target draw (W_0, pi_0, f^(0)) from the same first layer.
inline SimulatedStudy draw_target(const GenerativeConfig& cfg, const EvalGrid& grid,
                                  std::uint64_t run_tag, std::uint64_t target_index) {
    Rng rng = Rng(cfg.seed).split(detail::kTargetStream, run_tag).split(target_index);
    return simulate_study_layer1(cfg, grid, rng);
}

inline std::vector<StudyRecord> to_study_records(const std::vector<SimulatedStudy>& sims,
                                                 bool oracle_functions = false) {
    std::vector<StudyRecord> out;
    out.reserve(sims.size());
    for (std::size_t i = 0; i < sims.size(); ++i) {
        StudyRecord r;
        r.id = int(i);
        r.covariates = sims[i].covariates;
        r.f_hat = oracle_functions ? sims[i].f_true : sims[i].f_hat;
        r.f_true = sims[i].f_true;
        r.pi_true = sims[i].pi_true;
        out.push_back(std::move(r));
    }
    return out;
}

struct MseRow {
    int m = 0;
    int k = 0;
    int run = 0;
    double mse = 0.0;
};

/// Full-pipeline target MSE per (m, K, run). Data and targets are shared
/// across K within a run, so the K comparison is paired. Uses the varying-m
/// neighborhood-radius schedule.
inline std::vector<MseRow> run_mse_experiment(GenerativeConfig cfg, const std::vector<int>& m_values,
                                              const std::vector<int>& k_values, int runs,
                                              int targets_per_run = 20,
                                              std::size_t grid_size = 1000) {
    if (runs < 1) throw ArgumentError("run_mse_experiment: runs must be >= 1");
    const std::uint64_t base_seed = cfg.seed;
    std::vector<MseRow> rows(m_values.size() * std::size_t(runs) * k_values.size());

    for (std::size_t mi = 0; mi < m_values.size(); ++mi) {
        const int m = m_values[mi];
        parallel_for(std::size_t(runs), [&, mi, m](std::size_t run) {
            GenerativeConfig local = cfg;
            local.m = m;
            local.seed = Rng(base_seed).split(0x6d7365ull, (std::uint64_t(m) << 20) + run).root();
            auto [grid, sims] = generate(local, grid_size);
            const std::vector<StudyRecord> studies = to_study_records(sims);
            const std::vector<FuncSample> funcs = extract_f_hat(studies);
            const DenoiseParams dn = schedule_tuning(funcs, grid, m);

            std::vector<SimulatedStudy> targets(static_cast<std::size_t>(targets_per_run));
            for (int t = 0; t < targets_per_run; ++t)
                targets[std::size_t(t)] =
                    draw_target(local, grid, (std::uint64_t(m) << 20) + run, std::uint64_t(t));

            for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
                PipelineConfig pc;
                pc.k = k_values[ki];
                pc.denoise_params = dn;
                pc.weight_model = WeightModelKind::dirichlet;
                // at large m the schedule radius falls below the pairwise
                // noise floor and pruning at N >= 2 can empty the retained
                // set; keep the scheduled radius but stop pruning then
                TrainedPipeline pipe = [&] {
                    try {
                        return fit_pipeline(studies, grid, pc);
                    } catch (const ArgumentError&) {
                        PipelineConfig soft = pc;
                        soft.denoise_params = DenoiseParams(1, dn.delta);
                        return fit_pipeline(studies, grid, soft);
                    }
                }();
                double mse = 0.0;
                for (const auto& tgt : targets) {
                    const FuncSample pred = predict_function(pipe, tgt.covariates);
                    const double d = l2_dist(pred, tgt.f_true, grid);
                    mse += d * d;
                }
                mse /= double(targets_per_run);
                const std::size_t slot =
                    (mi * std::size_t(runs) + run) * k_values.size() + ki;
                rows[slot] = MseRow{m, k_values[ki], int(run), mse};
            }
        });
    }
    return rows;
}

inline double mean_mse(const std::vector<MseRow>& rows, int m, int k) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows)
        if (r.m == m && r.k == k) {
            sum += r.mse;
            ++n;
        }
    if (n == 0) throw ArgumentError("mean_mse: no rows for the requested (m, k)");
    return sum / double(n);
}

/// Streaming coverage accumulator with fixed x-bins.
class CoverageAccumulator {
public:
    CoverageAccumulator(double x_lo, double x_hi, int bins)
        : x_lo_(x_lo), x_hi_(x_hi), count_(std::size_t(bins), 0),
          covered_(std::size_t(bins), 0), length_(std::size_t(bins), 0.0) {
        if (bins < 1 || !(x_hi > x_lo)) throw ArgumentError("CoverageAccumulator: bad bins/range");
    }

    void add(double x, double truth, double center, double half_width) {
        const int bins = int(count_.size());
        int b = int((x - x_lo_) / (x_hi_ - x_lo_) * bins);
        b = std::clamp(b, 0, bins - 1);
        const bool cov = std::fabs(truth - center) <= half_width;
        ++count_[std::size_t(b)];
        covered_[std::size_t(b)] += cov ? 1 : 0;
        length_[std::size_t(b)] += 2.0 * half_width;
        ++n_;
        covered_total_ += cov ? 1 : 0;
        length_total_ += 2.0 * half_width;
    }

    void merge(const CoverageAccumulator& other) {
        for (std::size_t b = 0; b < count_.size(); ++b) {
            count_[b] += other.count_[b];
            covered_[b] += other.covered_[b];
            length_[b] += other.length_[b];
        }
        n_ += other.n_;
        covered_total_ += other.covered_total_;
        length_total_ += other.length_total_;
    }

    CoverageReport report() const {
        CoverageReport rep;
        const int bins = int(count_.size());
        const double width = (x_hi_ - x_lo_) / bins;
        for (int b = 0; b < bins; ++b) {
            if (count_[std::size_t(b)] == 0) continue;
            CoverageRow row;
            row.x_lo = x_lo_ + b * width;
            row.x_hi = x_lo_ + (b + 1) * width;
            row.n = count_[std::size_t(b)];
            row.coverage = double(covered_[std::size_t(b)]) / double(count_[std::size_t(b)]);
            row.mean_length = length_[std::size_t(b)] / double(count_[std::size_t(b)]);
            rep.per_bin.push_back(row);
        }
        rep.n = n_;
        rep.coverage = n_ ? double(covered_total_) / double(n_) : 0.0;
        rep.mean_length = n_ ? length_total_ / double(n_) : 0.0;
        return rep;
    }

private:
    double x_lo_, x_hi_;
    std::vector<std::size_t> count_, covered_;
    std::vector<double> length_;
    std::size_t n_ = 0;
    std::size_t covered_total_ = 0;
    double length_total_ = 0.0;
};

/// Split-conformal coverage study: per run, a 70-30 split and one shared
/// quantile curve; fresh targets are checked pointwise against the truth.
/// oracle_functions replaces every f-hat with the oracle f, exercising the
/// finite-sample guarantee without estimation error.
inline CoverageReport run_coverage_experiment(GenerativeConfig cfg, double alpha, int runs,
                                              int targets_per_run, bool oracle_functions = false,
                                              std::size_t grid_size = 1000, int bins = 24,
                                              double split_fraction = 0.7) {
    if (runs < 1) throw ArgumentError("run_coverage_experiment: runs must be >= 1");
    const std::uint64_t base_seed = cfg.seed;
    std::vector<CoverageAccumulator> accs(std::size_t(runs),
                                          CoverageAccumulator(-3.0 * cfg.x_sd, 3.0 * cfg.x_sd, bins));

    parallel_for(std::size_t(runs), [&](std::size_t run) {
        GenerativeConfig local = cfg;
        local.seed = Rng(base_seed).split(0x636f76ull, run).root();
        auto [grid, sims] = generate(local, grid_size);
        const std::vector<StudyRecord> studies = to_study_records(sims, oracle_functions);

        PipelineConfig pc;
        pc.k = kPaperBasisCount;
        pc.weight_model = WeightModelKind::dirichlet;
        const ConformalCurveBatch batch = split_conformal_curve_batch(
            studies, alpha, split_fraction, local.seed, pc, grid);

        for (int t = 0; t < targets_per_run; ++t) {
            const SimulatedStudy tgt = draw_target(local, grid, run, std::uint64_t(t));
            const FuncSample center = predict_function(batch.pipeline, tgt.covariates);
            for (std::size_t j = 0; j < grid.size(); ++j)
                accs[run].add(grid.points()[j], tgt.f_true.values[j], center.values[j],
                              batch.half_widths[j]);
        }
    });

    CoverageAccumulator all(-3.0 * cfg.x_sd, 3.0 * cfg.x_sd, bins);
    for (const auto& a : accs) all.merge(a);
    return all.report();
}

} // namespace metahunt
