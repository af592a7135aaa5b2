#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "metahunt/metahunt.hpp"

using namespace metahunt;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

std::vector<double> parse_vector(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ArgumentError("cannot parse number '" + tok + "' in '" + csv + "'");
        }
    }
    if (out.empty()) throw ArgumentError("empty vector argument '" + csv + "'");
    return out;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> out;
    for (double v : parse_vector(csv)) out.push_back(int(v));
    return out;
}

void emit_csv(const std::string& out_path, const std::string& header,
              const std::vector<std::vector<std::string>>& rows) {
    if (out_path.empty()) {
        std::cout << header << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) std::cout << ",";
                std::cout << row[i];
            }
            std::cout << "\n";
        }
        return;
    }
    write_csv(out_path, header, rows);
}

PipelineConfig make_config(int k, const std::string& weight_model, const std::string& feature_map,
                           int degree, double ridge, std::optional<int> n_param,
                           std::optional<double> delta) {
    PipelineConfig pc;
    pc.k = k;
    if (weight_model == "dirichlet")
        pc.weight_model = WeightModelKind::dirichlet;
    else if (weight_model == "logratio")
        pc.weight_model = WeightModelKind::logratio;
    else
        throw ArgumentError("unknown weight model '" + weight_model + "'");
    if (feature_map == "identity")
        pc.feature_kind = FeatureKind::identity;
    else if (feature_map == "polynomial")
        pc.feature_kind = FeatureKind::polynomial;
    else
        throw ArgumentError("unknown feature map '" + feature_map + "'");
    pc.feature_degree = degree;
    pc.ridge_lambda = ridge;
    if (n_param || delta) {
        if (!(n_param && delta))
            throw ArgumentError("--n-param and --delta must be given together");
        pc.denoise_params = DenoiseParams(*n_param, *delta);
    }
    return pc;
}

std::string fmt(double v) { return csv_double(v); }

int run(int argc, char** argv) {
    CLI::App app{"MetaHunt: basis hunting, weight modeling, and conformal prediction "
                 "for study-level function estimates"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic study bundle");
    int sim_m = 100, sim_n = 200;
    std::uint64_t sim_seed = 1;
    std::size_t sim_grid = 1000;
    bool sim_paper = false;
    std::string sim_out;
    sim->add_option("--m", sim_m, "Number of studies");
    sim->add_option("--n", sim_n, "Individuals per study");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--grid-size", sim_grid, "Evaluation grid size");
    sim->add_flag("--paper-defaults", sim_paper, "Use the published simulation constants");
    sim->add_option("--out", sim_out, "Output bundle path")->required();

    auto* hunt = app.add_subcommand("hunt", "Recover bases and fit the weight model");
    std::string hunt_in, hunt_out, hunt_select, hunt_wm = "dirichlet", hunt_fm = "identity";
    int hunt_k = 0, hunt_degree = 2, hunt_folds = 5;
    double hunt_ridge = 1e-8;
    std::optional<int> hunt_n;
    std::optional<double> hunt_delta;
    std::uint64_t hunt_seed = 1;
    hunt->add_option("--in", hunt_in, "Input bundle")->required();
    hunt->add_option("--k", hunt_k, "Number of basis functions");
    hunt->add_option("--select-k", hunt_select, "Choose K by 'elbow' or 'cv'");
    hunt->add_option("--n-param", hunt_n, "Denoising neighborhood count N");
    hunt->add_option("--delta", hunt_delta, "Denoising radius");
    hunt->add_option("--weight-model", hunt_wm, "dirichlet | logratio");
    hunt->add_option("--feature-map", hunt_fm, "identity | polynomial");
    hunt->add_option("--degree", hunt_degree, "Polynomial feature degree");
    hunt->add_option("--ridge", hunt_ridge, "Log-ratio ridge penalty");
    hunt->add_option("--folds", hunt_folds, "CV folds for --select-k cv");
    hunt->add_option("--seed", hunt_seed, "Seed for CV fold assignment");
    hunt->add_option("--out", hunt_out, "Output pipeline artifact")->required();

    auto* sel = app.add_subcommand("select-k", "Emit the K-selection report as CSV");
    std::string sel_in, sel_out, sel_method = "elbow", sel_wm = "dirichlet";
    int sel_kmax = 8, sel_folds = 5;
    std::string sel_candidates;
    std::uint64_t sel_seed = 1;
    sel->add_option("--in", sel_in, "Input bundle")->required();
    sel->add_option("--method", sel_method, "elbow | cv");
    sel->add_option("--k-max", sel_kmax, "Largest K for the elbow curve");
    sel->add_option("--candidates", sel_candidates, "CV candidate list, e.g. 2,3,4");
    sel->add_option("--folds", sel_folds, "CV folds");
    sel->add_option("--weight-model", sel_wm, "dirichlet | logratio");
    sel->add_option("--seed", sel_seed, "Seed for CV fold assignment");
    sel->add_option("--out", sel_out, "Output CSV (stdout when absent)");

    auto* pred = app.add_subcommand("predict", "Predict the target function from an artifact");
    std::string pred_artifact, pred_w0, pred_out;
    pred->add_option("--artifact", pred_artifact, "Pipeline artifact")->required();
    pred->add_option("--w0", pred_w0, "Target covariates, comma-separated")->required();
    pred->add_option("--out", pred_out, "Output CSV (stdout when absent)");

    auto* conf = app.add_subcommand("conformal", "Conformal prediction intervals");
    std::string conf_in, conf_w0, conf_out, conf_method = "split", conf_functional;
    double conf_alpha = 0.05, conf_split = 0.7, conf_bandwidth = 3.0;
    int conf_k = 4, conf_folds = 5;
    bool conf_xgrid = false;
    std::string conf_wm = "dirichlet";
    std::uint64_t conf_seed = 1;
    conf->add_option("--in", conf_in, "Input bundle")->required();
    conf->add_option("--w0", conf_w0, "Target covariates")->required();
    conf->add_option("--alpha", conf_alpha, "Miscoverage level");
    conf->add_option("--method", conf_method, "split | cross | weighted");
    conf->add_option("--k", conf_k, "Number of basis functions");
    conf->add_option("--split-fraction", conf_split, "Training fraction");
    conf->add_option("--folds", conf_folds, "Folds for cross-conformal");
    conf->add_option("--bandwidth-multiplier", conf_bandwidth, "Kernel bandwidth multiplier");
    conf->add_flag("--x-grid", conf_xgrid, "Intervals at every grid point");
    conf->add_option("--functional", conf_functional, "'ate' for the grid-mean functional");
    conf->add_option("--weight-model", conf_wm, "dirichlet | logratio");
    conf->add_option("--seed", conf_seed, "Split seed");
    conf->add_option("--out", conf_out, "Output CSV (stdout when absent)");

    auto* eval = app.add_subcommand("evaluate", "Coverage of an interval CSV against truth");
    std::string eval_intervals, eval_truth, eval_out;
    int eval_bins = 20;
    eval->add_option("--intervals", eval_intervals, "CSV with columns x,center,lo,hi[,...]")
        ->required();
    eval->add_option("--truth", eval_truth, "CSV with columns x,value")->required();
    eval->add_option("--bins", eval_bins, "Number of x bins");
    eval->add_option("--out", eval_out, "Output CSV (stdout when absent)");

    auto* mse = app.add_subcommand("mse-experiment", "Target-function MSE across m and K");
    std::string mse_m = "50,100,400", mse_k = "2,4,8", mse_out;
    int mse_runs = 40, mse_targets = 20;
    std::size_t mse_grid = 1000;
    std::uint64_t mse_seed = 1;
    mse->add_option("--m-values", mse_m, "Study counts, comma-separated");
    mse->add_option("--k-values", mse_k, "Basis counts, comma-separated");
    mse->add_option("--runs", mse_runs, "Monte Carlo runs per cell");
    mse->add_option("--targets", mse_targets, "Fresh targets per run");
    mse->add_option("--grid-size", mse_grid, "Evaluation grid size");
    mse->add_option("--seed", mse_seed, "Master seed");
    mse->add_option("--out", mse_out, "Output CSV (stdout when absent)");

    auto* cov = app.add_subcommand("coverage-experiment", "Split-conformal coverage study");
    std::string cov_out;
    double cov_alpha = 0.05;
    int cov_runs = 50, cov_targets = 100, cov_bins = 24;
    std::size_t cov_grid = 1000;
    bool cov_oracle = false, cov_full = false;
    std::uint64_t cov_seed = 1;
    cov->add_option("--alpha", cov_alpha, "Miscoverage level");
    cov->add_option("--runs", cov_runs, "Monte Carlo runs (desk scale)");
    cov->add_flag("--full-scale", cov_full, "Use the published 200-run design");
    cov->add_option("--targets", cov_targets, "Targets per run");
    cov->add_option("--bins", cov_bins, "Number of x bins");
    cov->add_option("--grid-size", cov_grid, "Evaluation grid size");
    cov->add_flag("--oracle", cov_oracle, "Feed oracle functions (zero estimation error)");
    cov->add_option("--seed", cov_seed, "Master seed");
    cov->add_option("--out", cov_out, "Output CSV (stdout when absent)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage; // --help exits 0, bad usage exits 2
    }

    if (sim->parsed()) {
        GenerativeConfig cfg = paper_defaults();
        cfg.m = sim_m;
        cfg.n_per_study = sim_n;
        cfg.seed = sim_seed;
        if (cfg.m < 1) throw ArgumentError("--m must be >= 1");
        auto [grid, sims] = generate(cfg, sim_grid);
        StudyBundle bundle{grid, to_study_records(sims), cfg.seed, json()};
        bundle.meta_config = json{{"m", cfg.m},
                                  {"n_per_study", cfg.n_per_study},
                                  {"x_sd", cfg.x_sd},
                                  {"noise_sd", cfg.noise_sd},
                                  {"dirichlet_scale", cfg.dirichlet_scale},
                                  {"grid_size", sim_grid},
                                  {"paper_defaults", sim_paper}};
        write_bundle(bundle, sim_out);
        std::cerr << "wrote " << bundle.studies.size() << " studies to " << sim_out << "\n";
        return 0;
    }

    if (hunt->parsed()) {
        const StudyBundle bundle = read_bundle(hunt_in);
        PipelineConfig pc = make_config(hunt_k, hunt_wm, hunt_fm, hunt_degree, hunt_ridge,
                                        hunt_n, hunt_delta);
        KSelectionReport report;
        bool has_report = false;
        if (!hunt_select.empty()) {
            const std::vector<FuncSample> funcs = extract_f_hat(bundle.studies);
            const DenoiseParams dn =
                pc.denoise_params ? *pc.denoise_params
                                  : default_tuning(funcs, bundle.grid, int(funcs.size()));
            if (hunt_select == "elbow") {
                const int k_max = std::min<int>(8, int(bundle.studies.size()));
                report = elbow_curve(funcs, bundle.grid, k_max, dn, pc.elbow_threshold);
            } else if (hunt_select == "cv") {
                report = cv_select_k(bundle.studies, bundle.grid, {2, 3, 4, 5, 6, 7, 8},
                                     hunt_folds, pc, hunt_seed);
            } else {
                throw ArgumentError("--select-k must be 'elbow' or 'cv'");
            }
            pc.k = report.chosen_k;
            has_report = true;
        } else if (hunt_k < 1) {
            throw ArgumentError("either --k or --select-k is required");
        }
        if (pc.k > int(bundle.studies.size()))
            throw ArgumentError("--k exceeds the number of studies");
        const TrainedPipeline pipe = fit_pipeline(bundle.studies, bundle.grid, pc);
        json artifact = pipeline_to_json(pipe);
        if (has_report) {
            json diag{{"chosen_k", report.chosen_k},
                      {"k_values", report.k_values},
                      {"reconstruction_errors", report.reconstruction_errors},
                      {"method", report.method == KSelectionMethod::cv ? "cv" : "elbow"}};
            if (!report.cv_errors.empty()) diag["cv_errors"] = report.cv_errors;
            artifact["diagnostics"] = std::move(diag);
            artifact["content_hash"] = "";
            artifact["content_hash"] = io_detail::hash_hex(io_detail::hash_json(artifact));
        }
        write_json_file(artifact, hunt_out);
        std::cerr << "wrote pipeline artifact (K=" << pc.k << ") to " << hunt_out << "\n";
        return 0;
    }

    if (sel->parsed()) {
        const StudyBundle bundle = read_bundle(sel_in);
        const std::vector<FuncSample> funcs = extract_f_hat(bundle.studies);
        const DenoiseParams dn = default_tuning(funcs, bundle.grid, int(funcs.size()));
        PipelineConfig pc = make_config(0, sel_wm, "identity", 1, 1e-8, std::nullopt, std::nullopt);
        KSelectionReport report;
        if (sel_method == "elbow") {
            report = elbow_curve(funcs, bundle.grid, sel_kmax, dn, pc.elbow_threshold);
        } else if (sel_method == "cv") {
            const std::vector<int> cands =
                sel_candidates.empty() ? std::vector<int>{2, 3, 4, 5, 6, 7, 8}
                                       : parse_ints(sel_candidates);
            report = cv_select_k(bundle.studies, bundle.grid, cands, sel_folds, pc, sel_seed);
        } else {
            throw ArgumentError("--method must be 'elbow' or 'cv'");
        }
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < report.k_values.size(); ++i) {
            rows.push_back({std::to_string(report.k_values[i]),
                            fmt(report.reconstruction_errors[i]),
                            report.cv_errors.empty() ? "" : fmt(report.cv_errors[i])});
        }
        rows.push_back({"chosen", std::to_string(report.chosen_k), ""});
        emit_csv(sel_out, "k,recon_error,cv_error", rows);
        return 0;
    }

    if (pred->parsed()) {
        const TrainedPipeline pipe = read_pipeline(pred_artifact);
        const std::vector<double> w0 = parse_vector(pred_w0);
        const FuncSample f = predict_function(pipe, w0);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t j = 0; j < pipe.grid.size(); ++j)
            rows.push_back({fmt(pipe.grid.points()[j]), fmt(f.values[j])});
        emit_csv(pred_out, "x,f_tilde", rows);
        return 0;
    }

    if (conf->parsed()) {
        const StudyBundle bundle = read_bundle(conf_in);
        const std::vector<double> w0 = parse_vector(conf_w0);
        PipelineConfig pc = make_config(conf_k, conf_wm, "identity", 1, 1e-8,
                                        std::nullopt, std::nullopt);
        if (!bundle.studies.empty() && w0.size() != bundle.studies[0].covariates.size())
            throw ArgumentError("--w0 dimension does not match the bundle covariates");
        std::vector<std::vector<std::string>> rows;
        const std::string header = "x,center,lo,hi,method,alpha";
        if (conf_xgrid == !conf_functional.empty())
            throw ArgumentError("exactly one of --x-grid or --functional is required");
        if (conf_xgrid) {
            ConformalCurve curve;
            if (conf_method == "split")
                curve = split_conformal_curve(bundle.studies, w0, conf_alpha, conf_split,
                                              conf_seed, pc, bundle.grid);
            else if (conf_method == "cross")
                curve = cross_conformal_curve(bundle.studies, w0, conf_alpha, conf_folds,
                                              conf_seed, pc, bundle.grid);
            else if (conf_method == "weighted")
                curve = weighted_conformal_curve(bundle.studies, w0, conf_alpha, conf_bandwidth,
                                                 conf_split, conf_seed, pc, bundle.grid);
            else
                throw ArgumentError("--method must be split, cross, or weighted");
            for (std::size_t j = 0; j < bundle.grid.size(); ++j)
                rows.push_back({fmt(bundle.grid.points()[j]), fmt(curve.centers[j]),
                                fmt(curve.centers[j] - curve.half_widths[j]),
                                fmt(curve.centers[j] + curve.half_widths[j]), conf_method,
                                fmt(conf_alpha)});
        } else {
            if (conf_functional != "ate")
                throw ArgumentError("--functional supports 'ate'");
            const Functional phi = Functional::mean_over_grid();
            PredictionInterval iv;
            if (conf_method == "split")
                iv = split_conformal(bundle.studies, w0, phi, conf_alpha, conf_split, conf_seed,
                                     pc, bundle.grid);
            else if (conf_method == "cross")
                iv = cross_conformal(bundle.studies, w0, phi, conf_alpha, conf_folds, conf_seed,
                                     pc, bundle.grid);
            else if (conf_method == "weighted")
                iv = weighted_conformal(bundle.studies, w0, phi, conf_alpha, conf_bandwidth,
                                        conf_split, conf_seed, pc, bundle.grid);
            else
                throw ArgumentError("--method must be split, cross, or weighted");
            rows.push_back({"ate", fmt(iv.center), fmt(iv.lo()), fmt(iv.hi()), conf_method,
                            fmt(conf_alpha)});
        }
        emit_csv(conf_out, header, rows);
        return 0;
    }

    if (eval->parsed()) {
        auto read_rows = [](const std::string& path) {
            std::ifstream in(path);
            if (!in) throw DataError("cannot open: " + path);
            std::vector<std::vector<std::string>> rows;
            std::string line;
            std::getline(in, line); // header
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                std::vector<std::string> cells;
                std::stringstream ss(line);
                std::string tok;
                while (std::getline(ss, tok, ',')) cells.push_back(tok);
                rows.push_back(std::move(cells));
            }
            return rows;
        };
        const auto ivs = read_rows(eval_intervals);
        const auto truth = read_rows(eval_truth);
        if (ivs.size() != truth.size())
            throw DataError("intervals and truth have different row counts");
        std::vector<CoverageRecord> recs;
        for (std::size_t i = 0; i < ivs.size(); ++i) {
            if (ivs[i].size() < 4 || truth[i].size() < 2)
                throw DataError("row " + std::to_string(i) + " has too few columns");
            CoverageRecord r;
            r.x = std::stod(ivs[i][0]);
            r.center = std::stod(ivs[i][1]);
            const double lo = std::stod(ivs[i][2]);
            const double hi = std::stod(ivs[i][3]);
            r.half_width = (hi - lo) / 2.0;
            const double tx = std::stod(truth[i][0]);
            if (std::fabs(tx - r.x) > 1e-9 * std::max(1.0, std::fabs(r.x)))
                throw DataError("x mismatch at row " + std::to_string(i));
            r.truth = std::stod(truth[i][1]);
            recs.push_back(r);
        }
        const CoverageReport rep = evaluate_coverage(recs, eval_bins);
        std::vector<std::vector<std::string>> rows;
        for (const auto& b : rep.per_bin)
            rows.push_back({fmt(0.5 * (b.x_lo + b.x_hi)), std::to_string(b.n), fmt(b.coverage),
                            fmt(b.mean_length)});
        rows.push_back({"overall", std::to_string(rep.n), fmt(rep.coverage), fmt(rep.mean_length)});
        emit_csv(eval_out, "x,n,coverage,mean_length", rows);
        return 0;
    }

    if (mse->parsed()) {
        GenerativeConfig cfg = paper_defaults();
        cfg.seed = mse_seed;
        const std::vector<MseRow> result = run_mse_experiment(
            cfg, parse_ints(mse_m), parse_ints(mse_k), mse_runs, mse_targets, mse_grid);
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : result)
            rows.push_back({std::to_string(r.m), std::to_string(r.k), std::to_string(r.run),
                            fmt(r.mse)});
        emit_csv(mse_out, "m,k,run,mse", rows);
        return 0;
    }

    if (cov->parsed()) {
        GenerativeConfig cfg = paper_defaults();
        cfg.seed = cov_seed;
        const int runs = cov_full ? 200 : cov_runs;
        const CoverageReport rep = run_coverage_experiment(cfg, cov_alpha, runs, cov_targets,
                                                           cov_oracle, cov_grid, cov_bins);
        std::vector<std::vector<std::string>> rows;
        for (const auto& b : rep.per_bin)
            rows.push_back({fmt(0.5 * (b.x_lo + b.x_hi)), std::to_string(b.n), fmt(b.coverage),
                            fmt(b.mean_length)});
        rows.push_back({"overall", std::to_string(rep.n), fmt(rep.coverage), fmt(rep.mean_length)});
        emit_csv(cov_out, "x,n,coverage,mean_length", rows);
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
