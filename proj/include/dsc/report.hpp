#pragma once

// JSON (de)serialisation of configs and reports, plus CSV and markdown table
// rendering. JSON objects use sorted keys, so output is stable run to run.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsc/baselines.hpp"
#include "dsc/pipeline.hpp"

namespace dsc {

using json = nlohmann::json;

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(out);
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
    if (auto it = j.find(key); it != j.end()) {
        if (it->is_null()) out.reset();
        else out = it->get<T>();
    }
}

template <class T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace detail

// ---- configs ---------------------------------------------------------------

inline void to_json(json& j, const SyntheticSpec& s) {
    j = {{"num_subspaces", s.num_subspaces}, {"subspace_dim", s.subspace_dim}, {"ambient_dim", s.ambient_dim},
         {"points_per_subspace", s.points_per_subspace}, {"noise_sigma", s.noise_sigma},
         {"affine_offset", s.affine_offset}, {"nonlinear_warp", s.nonlinear_warp}, {"orthogonal", s.orthogonal},
         {"seed", s.seed}};
}

inline void from_json(const json& j, SyntheticSpec& s) {
    detail::read_opt(j, "num_subspaces", s.num_subspaces);
    detail::read_opt(j, "subspace_dim", s.subspace_dim);
    detail::read_opt(j, "ambient_dim", s.ambient_dim);
    detail::read_opt(j, "points_per_subspace", s.points_per_subspace);
    detail::read_opt(j, "noise_sigma", s.noise_sigma);
    detail::read_opt(j, "affine_offset", s.affine_offset);
    detail::read_opt(j, "nonlinear_warp", s.nonlinear_warp);
    detail::read_opt(j, "orthogonal", s.orthogonal);
    detail::read_opt(j, "seed", s.seed);
}

inline void to_json(json& j, const DatasetSource& d) {
    j = {{"path", d.path},
         {"labels_path", d.labels_path},
         {"has_labels", d.has_labels},
         {"synthetic", d.synthetic},
         {"normalization", d.normalization ? json(to_string(*d.normalization)) : json(nullptr)},
         {"family", to_string(d.family)}};
}

inline void from_json(const json& j, DatasetSource& d) {
    detail::read_opt(j, "path", d.path);
    detail::read_opt(j, "labels_path", d.labels_path);
    detail::read_opt(j, "has_labels", d.has_labels);
    detail::read_opt(j, "synthetic", d.synthetic);
    if (auto it = j.find("normalization"); it != j.end())
        d.normalization = it->is_null() ? std::nullopt
                                        : std::optional<Normalization>(parse_normalization(it->get<std::string>()));
    if (auto it = j.find("family"); it != j.end()) d.family = parse_family(it->get<std::string>());
}

inline void to_json(json& j, const StageToggles& s) {
    j = {{"se_joint", s.se_joint}, {"se_last", s.se_last}, {"q_loss", s.q_loss}, {"ipd", s.ipd}};
}

inline void from_json(const json& j, StageToggles& s) {
    detail::read_opt(j, "se_joint", s.se_joint);
    detail::read_opt(j, "se_last", s.se_last);
    detail::read_opt(j, "q_loss", s.q_loss);
    detail::read_opt(j, "ipd", s.ipd);
}

inline void to_json(json& j, const TrainConfig& t) {
    j = {{"learning_rate", t.learning_rate},
         {"pretrain_epochs", t.pretrain_epochs},
         {"max_finetune_epochs", t.max_finetune_epochs},
         {"q_refresh_period", t.q_refresh_period},
         {"delta", t.delta},
         {"seed", t.seed},
         {"dp_pair_sample", detail::opt_json(t.dp_pair_sample)},
         {"dp_variant", to_string(t.dp_variant)}};
}

inline void from_json(const json& j, TrainConfig& t) {
    detail::read_opt(j, "learning_rate", t.learning_rate);
    detail::read_opt(j, "pretrain_epochs", t.pretrain_epochs);
    detail::read_opt(j, "max_finetune_epochs", t.max_finetune_epochs);
    detail::read_opt(j, "q_refresh_period", t.q_refresh_period);
    detail::read_opt(j, "delta", t.delta);
    detail::read_opt(j, "seed", t.seed);
    detail::read_opt(j, "dp_pair_sample", t.dp_pair_sample);
    if (auto it = j.find("dp_variant"); it != j.end()) t.dp_variant = parse_dp_variant(it->get<std::string>());
}

inline void to_json(json& j, const OracleWeights& w) { j = {{"lambda1", w.lambda1}, {"lambda2", w.lambda2}}; }

inline void from_json(const json& j, OracleWeights& w) {
    detail::read_opt(j, "lambda1", w.lambda1);
    detail::read_opt(j, "lambda2", w.lambda2);
}

inline void to_json(json& j, const RunConfig& c) {
    j = {{"name", c.name},
         {"dataset", c.dataset},
         {"pretrain", to_string(c.pretrain_loss)},
         {"stages", c.stages},
         {"ipd_dim", detail::opt_json(c.ipd_dim)},
         {"num_clusters", c.num_clusters},
         {"train", c.train},
         {"oracle", detail::opt_json(c.oracle)},
         {"activation", to_string(c.activation)},
         {"weight_init", to_string(c.weight_init)},
         {"hidden", c.hidden},
         {"stage2_update_encoder", c.stage2_update_encoder},
         {"seed", c.seed}};
}

/// Missing keys keep their defaults, so a config file only needs the fields
/// it changes.
inline void from_json(const json& j, RunConfig& c) {
    detail::require(j.is_object(), "config: expected a JSON object");
    detail::read_opt(j, "name", c.name);
    detail::read_opt(j, "dataset", c.dataset);
    if (auto it = j.find("pretrain"); it != j.end()) c.pretrain_loss = parse_pretrain_loss(it->get<std::string>());
    detail::read_opt(j, "stages", c.stages);
    detail::read_opt(j, "ipd_dim", c.ipd_dim);
    detail::read_opt(j, "num_clusters", c.num_clusters);
    detail::read_opt(j, "train", c.train);
    detail::read_opt(j, "oracle", c.oracle);
    if (auto it = j.find("activation"); it != j.end()) c.activation = parse_activation(it->get<std::string>());
    if (auto it = j.find("weight_init"); it != j.end()) c.weight_init = parse_weight_init(it->get<std::string>());
    detail::read_opt(j, "hidden", c.hidden);
    detail::read_opt(j, "stage2_update_encoder", c.stage2_update_encoder);
    detail::read_opt(j, "seed", c.seed);
}

inline void to_json(json& j, const AdmmConfig& a) {
    j = {{"lambda", a.lambda}, {"rho", a.rho}, {"max_iters", a.max_iters},
         {"tol", a.tol}, {"penalty_growth", a.penalty_growth}, {"max_rho", a.max_rho}};
}

inline void from_json(const json& j, AdmmConfig& a) {
    detail::read_opt(j, "lambda", a.lambda);
    detail::read_opt(j, "rho", a.rho);
    detail::read_opt(j, "max_iters", a.max_iters);
    detail::read_opt(j, "tol", a.tol);
    detail::read_opt(j, "penalty_growth", a.penalty_growth);
    detail::read_opt(j, "max_rho", a.max_rho);
}

// ---- reports ---------------------------------------------------------------

inline void to_json(json& j, const MetricsReport& m) { j = {{"acc", m.acc}, {"nmi", m.nmi}, {"f1", m.f1}}; }

inline void from_json(const json& j, MetricsReport& m) {
    j.at("acc").get_to(m.acc);
    j.at("nmi").get_to(m.nmi);
    j.at("f1").get_to(m.f1);
}

inline void to_json(json& j, const EpochCounts& e) {
    j = {{"pretrain", e.pretrain}, {"stage1", e.stage1}, {"stage2", e.stage2}, {"oracle", e.oracle}};
}

inline void from_json(const json& j, EpochCounts& e) {
    detail::read_opt(j, "pretrain", e.pretrain);
    detail::read_opt(j, "stage1", e.stage1);
    detail::read_opt(j, "stage2", e.stage2);
    detail::read_opt(j, "oracle", e.oracle);
}

inline void to_json(json& j, const RunReport& r) {
    j = {{"schema_version", r.schema_version},
         {"config", r.config},
         {"status", r.status},
         {"failed_stage", r.failed_stage},
         {"error", r.error},
         {"metrics", detail::opt_json(r.metrics)},
         {"subspace_preserving_rate", detail::opt_json(r.subspace_preserving_rate)},
         {"epsilon_history", {{"stage1", r.epsilon_stage1}, {"stage2", r.epsilon_stage2}}},
         {"epochs", r.epochs},
         {"wall_time_seconds", r.wall_time_seconds},
         {"n", r.n},
         {"num_clusters", r.num_clusters},
         {"ipd_dim_used", detail::opt_json(r.ipd_dim_used)},
         {"labels", r.labels}};
}

inline void from_json(const json& j, RunReport& r) {
    j.at("schema_version").get_to(r.schema_version);
    detail::require(r.schema_version == kReportSchemaVersion,
                    "report: unsupported schema_version " + std::to_string(r.schema_version));
    j.at("config").get_to(r.config);
    j.at("status").get_to(r.status);
    detail::read_opt(j, "failed_stage", r.failed_stage);
    detail::read_opt(j, "error", r.error);
    detail::read_opt(j, "metrics", r.metrics);
    detail::read_opt(j, "subspace_preserving_rate", r.subspace_preserving_rate);
    if (auto it = j.find("epsilon_history"); it != j.end()) {
        detail::read_opt(*it, "stage1", r.epsilon_stage1);
        detail::read_opt(*it, "stage2", r.epsilon_stage2);
    }
    detail::read_opt(j, "epochs", r.epochs);
    detail::read_opt(j, "wall_time_seconds", r.wall_time_seconds);
    detail::read_opt(j, "n", r.n);
    detail::read_opt(j, "num_clusters", r.num_clusters);
    detail::read_opt(j, "ipd_dim_used", r.ipd_dim_used);
    detail::read_opt(j, "labels", r.labels);
}

inline void to_json(json& j, const MetricsSummary& s) {
    j = {{"mean", s.mean}, {"std", s.stddev}, {"trials", s.trials}};
}

inline void from_json(const json& j, MetricsSummary& s) {
    j.at("mean").get_to(s.mean);
    j.at("std").get_to(s.stddev);
    j.at("trials").get_to(s.trials);
}

inline void to_json(json& j, const BenchmarkEntry& e) {
    j = {{"algorithm", e.algorithm}, {"summary", e.summary}, {"trials", e.trials}, {"failures", e.failures}};
}

inline void from_json(const json& j, BenchmarkEntry& e) {
    j.at("algorithm").get_to(e.algorithm);
    j.at("summary").get_to(e.summary);
    j.at("trials").get_to(e.trials);
    j.at("failures").get_to(e.failures);
}

inline void to_json(json& j, const BenchmarkReport& b) {
    j = {{"schema_version", b.schema_version}, {"dataset", b.dataset}, {"trials", b.trials},
         {"per_cluster", b.per_cluster}, {"seed", b.seed}, {"entries", b.entries}};
}

inline void from_json(const json& j, BenchmarkReport& b) {
    j.at("schema_version").get_to(b.schema_version);
    detail::require(b.schema_version == kReportSchemaVersion,
                    "report: unsupported schema_version " + std::to_string(b.schema_version));
    j.at("dataset").get_to(b.dataset);
    j.at("trials").get_to(b.trials);
    j.at("per_cluster").get_to(b.per_cluster);
    j.at("seed").get_to(b.seed);
    j.at("entries").get_to(b.entries);
}

// ---- text rendering --------------------------------------------------------

enum class ReportFormat { json, csv, markdown };

inline ReportFormat parse_format(std::string_view s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    throw ContractError("unknown report format: " + std::string(s));
}

namespace detail {

inline std::string pct(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << 100.0 * v;
    return os.str();
}

inline std::string pct_pm(double mean, double sd) { return pct(mean) + " ± " + pct(sd); }

inline std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline const char* tick(bool b) { return b ? "✓" : ""; }

inline std::string metric_cells(const RunReport& r) {
    if (!r.metrics) return r.ok() ? " - | - | - |" : " failed (" + r.failed_stage + ") | | |";
    return " " + pct(r.metrics->acc) + " | " + pct(r.metrics->nmi) + " | " + pct(r.metrics->f1) + " |";
}

}  // namespace detail

inline std::string render(const RunReport& r, ReportFormat fmt);

/// Several runs (an ablation grid or a list of single runs).
inline std::string render(const std::vector<RunReport>& rows, ReportFormat fmt) {
    std::ostringstream os;
    switch (fmt) {
        case ReportFormat::json: {
            json j = {{"schema_version", kReportSchemaVersion}, {"runs", rows}};
            os << j.dump(2) << '\n';
            break;
        }
        case ReportFormat::csv:
            os << "name,status,failed_stage,acc,nmi,f1,subspace_preserving_rate,epochs_stage1,epochs_stage2,"
                  "wall_time_seconds\n";
            for (const auto& r : rows) {
                os << r.config.name << ',' << r.status << ',' << r.failed_stage << ',';
                if (r.metrics) os << detail::num(r.metrics->acc) << ',' << detail::num(r.metrics->nmi) << ','
                                  << detail::num(r.metrics->f1);
                else os << ",,";
                os << ',' << (r.subspace_preserving_rate ? detail::num(*r.subspace_preserving_rate) : "") << ','
                   << r.epochs.stage1 << ',' << r.epochs.stage2 << ',' << detail::num(r.wall_time_seconds) << '\n';
            }
            break;
        case ReportFormat::markdown:
            os << "| Row | L_SE last | L_SE joint | L_Q | IPD | ACC [%] | NMI [%] | F1 [%] |\n"
                  "|---|:-:|:-:|:-:|:-:|--:|--:|--:|\n";
            for (const auto& r : rows) {
                const StageToggles& s = r.config.stages;
                os << "| " << r.config.name << " | " << detail::tick(s.se_last) << " | " << detail::tick(s.se_joint)
                   << " | " << detail::tick(s.q_loss) << " | " << detail::tick(s.ipd) << " |"
                   << detail::metric_cells(r) << '\n';
            }
            break;
    }
    return os.str();
}

inline std::string render(const RunReport& r, ReportFormat fmt) {
    if (fmt == ReportFormat::json) return json(r).dump(2) + "\n";
    if (fmt == ReportFormat::csv) return render(std::vector<RunReport>{r}, fmt);
    std::ostringstream os;
    os << "| Algorithm | ACC [%] | NMI [%] | F1 [%] |\n|---|--:|--:|--:|\n";
    os << "| " << r.config.name << " |" << detail::metric_cells(r) << '\n';
    return os.str();
}

inline std::string render(const BenchmarkReport& b, ReportFormat fmt) {
    std::ostringstream os;
    switch (fmt) {
        case ReportFormat::json:
            os << json(b).dump(2) << '\n';
            break;
        case ReportFormat::csv:
            os << "algorithm,trials,failures,acc_mean,acc_std,nmi_mean,nmi_std,f1_mean,f1_std\n";
            for (const auto& e : b.entries) {
                const auto& m = e.summary.mean;
                const auto& s = e.summary.stddev;
                os << e.algorithm << ',' << e.summary.trials << ',' << e.failures << ',' << detail::num(m.acc) << ','
                   << detail::num(s.acc) << ',' << detail::num(m.nmi) << ',' << detail::num(s.nmi) << ','
                   << detail::num(m.f1) << ',' << detail::num(s.f1) << '\n';
            }
            break;
        case ReportFormat::markdown:
            os << "| Algorithm | ACC [%] | NMI [%] | F1 [%] |\n|---|--:|--:|--:|\n";
            for (const auto& e : b.entries) {
                const auto& m = e.summary.mean;
                const auto& s = e.summary.stddev;
                os << "| " << e.algorithm << " | ";
                if (e.summary.trials == 0) {
                    os << "failed | | |\n";
                    continue;
                }
                os << detail::pct_pm(m.acc, s.acc) << " | " << detail::pct_pm(m.nmi, s.nmi) << " | "
                   << detail::pct_pm(m.f1, s.f1) << " |\n";
            }
            break;
    }
    return os.str();
}

/// Writes to `path`, or to stdout when the path is empty or "-".
inline void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(ParseErrorKind::io, "cannot open " + path + " for writing");
    out << text;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(ParseErrorKind::io, "cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(ParseErrorKind::malformed, "config " + path + ": " + e.what());
    }
    return j.get<RunConfig>();
}

}  // namespace dsc
