#pragma once

#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "metahunt/errors.hpp"
#include "metahunt/pipeline.hpp"
#include "metahunt/simulation.hpp"
#include "metahunt/study.hpp"

namespace metahunt {

using json = nlohmann::json;

inline constexpr int kBundleFormatVersion = 1;
inline constexpr int kArtifactFormatVersion = 1;

/// In-memory study bundle: grid + studies + config echo.
struct StudyBundle {
    EvalGrid grid;
    std::vector<StudyRecord> studies;
    std::uint64_t seed = 0;
    json meta_config; // config echo, passed through untouched
};

namespace io_detail {

inline json grid_to_json(const EvalGrid& grid) {
    return json{{"points", grid.points()}, {"weights", grid.weights()}};
}

inline EvalGrid grid_from_json(const json& j) {
    if (!j.contains("points") || !j.contains("weights"))
        throw DataError("bundle: grid needs points and weights");
    return EvalGrid(j.at("points").get<std::vector<double>>(),
                    j.at("weights").get<std::vector<double>>());
}

inline std::uint64_t hash_json(const json& j) {
    const std::string s = j.dump();
    return detail::fnv1a(s.data(), s.size());
}

inline std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << "fnv1a:" << std::hex << std::setfill('0') << std::setw(16) << h;
    return os.str();
}

} // namespace io_detail

inline json bundle_to_json(const StudyBundle& bundle) {
    json studies = json::array();
    for (const auto& s : bundle.studies) {
        json rec{{"id", s.id}, {"W", s.covariates}, {"f_hat", s.f_hat.values}};
        if (s.f_true) rec["f_true"] = s.f_true->values;
        if (s.pi_true) rec["pi_true"] = s.pi_true->w;
        studies.push_back(std::move(rec));
    }
    json meta{{"format_version", kBundleFormatVersion}, {"seed", bundle.seed}};
    if (!bundle.meta_config.is_null()) meta["config"] = bundle.meta_config;
    return json{{"grid", io_detail::grid_to_json(bundle.grid)},
                {"meta", std::move(meta)},
                {"studies", std::move(studies)}};
}

inline StudyBundle bundle_from_json(const json& j) {
    if (!j.contains("grid") || !j.contains("studies") || !j.contains("meta"))
        throw DataError("bundle: missing grid/studies/meta");
    if (!j.at("meta").contains("format_version"))
        throw DataError("bundle: meta.format_version missing");
    EvalGrid grid = io_detail::grid_from_json(j.at("grid"));
    StudyBundle bundle{grid, {}, 0, json()};
    bundle.seed = j.at("meta").value("seed", std::uint64_t(0));
    if (j.at("meta").contains("config")) bundle.meta_config = j.at("meta").at("config");
    for (const auto& rec : j.at("studies")) {
        StudyRecord s;
        s.id = rec.value("id", int(bundle.studies.size()));
        if (!rec.contains("W") || !rec.contains("f_hat"))
            throw DataError("bundle: study needs W and f_hat");
        s.covariates = rec.at("W").get<std::vector<double>>();
        try {
            s.f_hat = FuncSample(grid, rec.at("f_hat").get<std::vector<double>>());
            if (rec.contains("f_true"))
                s.f_true = FuncSample(grid, rec.at("f_true").get<std::vector<double>>());
            if (rec.contains("pi_true"))
                s.pi_true = SimplexWeights(rec.at("pi_true").get<std::vector<double>>());
        } catch (const Error& e) {
            throw DataError("bundle: study " + std::to_string(s.id) + ": " + e.what());
        }
        bundle.studies.push_back(std::move(s));
    }
    return bundle;
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(1) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void write_bundle(const StudyBundle& bundle, const std::string& path) {
    write_json_file(bundle_to_json(bundle), path);
}

inline StudyBundle read_bundle(const std::string& path) {
    return bundle_from_json(read_json_file(path));
}

// --- pipeline artifact -----------------------------------------------------

inline json feature_map_to_json(const FeatureMap& map) {
    return json{{"kind", map.kind == FeatureKind::identity ? "identity" : "polynomial"},
                {"degree", map.degree},
                {"intercept", map.intercept},
                {"means", map.means},
                {"scales", map.scales}};
}

inline FeatureMap feature_map_from_json(const json& j) {
    FeatureMap map;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity")
        map.kind = FeatureKind::identity;
    else if (kind == "polynomial")
        map.kind = FeatureKind::polynomial;
    else
        throw DataError("artifact: unknown feature map kind " + kind);
    map.degree = j.at("degree").get<int>();
    map.intercept = j.at("intercept").get<bool>();
    map.means = j.at("means").get<std::vector<double>>();
    map.scales = j.at("scales").get<std::vector<double>>();
    map.standardized = true; // artifacts only ever store fitted maps
    return map;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    const std::size_t rows = j.size();
    if (rows == 0) return Matrix(0, 0); // K = 1 log-ratio model has no coefficients
    const std::size_t cols = j.at(0).size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
    return m;
}

inline json config_to_json(const PipelineConfig& cfg) {
    json j{{"k", cfg.k},
           {"weight_model", cfg.weight_model == WeightModelKind::dirichlet ? "dirichlet" : "logratio"},
           {"feature_kind", cfg.feature_kind == FeatureKind::identity ? "identity" : "polynomial"},
           {"feature_degree", cfg.feature_degree},
           {"feature_intercept", cfg.feature_intercept},
           {"ridge_lambda", cfg.ridge_lambda},
           {"elbow_threshold", cfg.elbow_threshold},
           {"alpha_floor", cfg.alpha_floor},
           {"alpha_cap", cfg.alpha_cap},
           {"dirichlet_max_iterations", cfg.dirichlet_max_iterations}};
    if (cfg.denoise_params)
        j["denoise"] = json{{"n_min", cfg.denoise_params->n_min}, {"delta", cfg.denoise_params->delta}};
    return j;
}

inline PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    cfg.k = j.at("k").get<int>();
    cfg.weight_model = j.at("weight_model").get<std::string>() == "dirichlet"
                           ? WeightModelKind::dirichlet
                           : WeightModelKind::logratio;
    cfg.feature_kind = j.at("feature_kind").get<std::string>() == "identity"
                           ? FeatureKind::identity
                           : FeatureKind::polynomial;
    cfg.feature_degree = j.at("feature_degree").get<int>();
    cfg.feature_intercept = j.at("feature_intercept").get<bool>();
    cfg.ridge_lambda = j.at("ridge_lambda").get<double>();
    cfg.elbow_threshold = j.at("elbow_threshold").get<double>();
    cfg.alpha_floor = j.at("alpha_floor").get<double>();
    cfg.alpha_cap = j.at("alpha_cap").get<double>();
    cfg.dirichlet_max_iterations = j.at("dirichlet_max_iterations").get<int>();
    if (j.contains("denoise"))
        cfg.denoise_params =
            DenoiseParams(j.at("denoise").at("n_min").get<int>(), j.at("denoise").at("delta").get<double>());
    return cfg;
}

inline json pipeline_to_json(const TrainedPipeline& pipe) {
    json basis_values = json::array();
    for (const auto& b : pipe.basis.bases) basis_values.push_back(b.values);

    json weight_model;
    if (const auto* d = std::get_if<DirichletRegParams>(&pipe.weight_params)) {
        weight_model = json{{"kind", "dirichlet"},
                            {"coef", matrix_to_json(d->coef)},
                            {"feature_map", feature_map_to_json(d->feature_map)},
                            {"alpha_floor", d->alpha_floor},
                            {"alpha_cap", d->alpha_cap},
                            {"converged", d->converged},
                            {"iterations", d->iterations},
                            {"log_likelihood", d->log_likelihood}};
    } else {
        const auto& lr = std::get<LogRatioRegParams>(pipe.weight_params);
        weight_model = json{{"kind", "logratio"},
                            {"coef", matrix_to_json(lr.coef)},
                            {"feature_map", feature_map_to_json(lr.feature_map)},
                            {"ridge_lambda", lr.ridge_lambda}};
    }

    json j{{"basis", json{{"values", std::move(basis_values)},
                          {"source_indices", pipe.basis.source_indices}}},
           {"config", config_to_json(pipe.config)},
           {"content_hash", ""},
           {"format_version", kArtifactFormatVersion},
           {"grid", io_detail::grid_to_json(pipe.grid)},
           {"used_denoise", json{{"n_min", pipe.used_denoise.n_min}, {"delta", pipe.used_denoise.delta}}},
           {"weight_model", std::move(weight_model)}};
    j["content_hash"] = io_detail::hash_hex(io_detail::hash_json(j));
    return j;
}

inline TrainedPipeline pipeline_from_json(json j) {
    if (!j.contains("format_version")) throw DataError("artifact: format_version missing");
    if (j.contains("content_hash")) {
        const std::string stored = j.at("content_hash").get<std::string>();
        j["content_hash"] = "";
        const std::string recomputed = io_detail::hash_hex(io_detail::hash_json(j));
        if (stored != recomputed)
            throw DataError("artifact: content hash mismatch (file corrupted or edited)");
    }
    EvalGrid grid = io_detail::grid_from_json(j.at("grid"));
    std::vector<FuncSample> bases;
    for (const auto& v : j.at("basis").at("values"))
        bases.emplace_back(grid, v.get<std::vector<double>>());
    std::vector<int> src = j.at("basis").at("source_indices").get<std::vector<int>>();
    BasisSet basis(std::move(bases), std::move(src), grid);

    const json& wm = j.at("weight_model");
    WeightModelParams params = [&]() -> WeightModelParams {
        if (wm.at("kind").get<std::string>() == "dirichlet") {
            DirichletRegParams d;
            d.coef = matrix_from_json(wm.at("coef"));
            d.feature_map = feature_map_from_json(wm.at("feature_map"));
            d.alpha_floor = wm.at("alpha_floor").get<double>();
            d.alpha_cap = wm.at("alpha_cap").get<double>();
            d.converged = wm.value("converged", true);
            d.iterations = wm.value("iterations", 0);
            d.log_likelihood = wm.value("log_likelihood", 0.0);
            return d;
        }
        LogRatioRegParams lr;
        lr.coef = matrix_from_json(wm.at("coef"));
        lr.feature_map = feature_map_from_json(wm.at("feature_map"));
        lr.ridge_lambda = wm.at("ridge_lambda").get<double>();
        return lr;
    }();

    PipelineConfig cfg = config_from_json(j.at("config"));
    DenoiseParams used(j.at("used_denoise").at("n_min").get<int>(),
                       j.at("used_denoise").at("delta").get<double>());
    return TrainedPipeline(std::move(basis), std::move(params), std::move(grid), cfg, used);
}

inline void write_pipeline(const TrainedPipeline& pipe, const std::string& path) {
    write_json_file(pipeline_to_json(pipe), path);
}

inline TrainedPipeline read_pipeline(const std::string& path) {
    return pipeline_from_json(read_json_file(path));
}

// --- CSV helpers -------------------------------------------------------------

/// Shortest-round-trip float formatting, shared by every CSV writer.
inline std::string csv_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    std::string s = os.str();
    // trim to the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        std::ostringstream t;
        t << std::setprecision(prec) << v;
        if (std::stod(t.str()) == v) return t.str();
    }
    return s;
}

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << row[i];
        }
        out << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

} // namespace metahunt
