#pragma once

// End-to-end orchestration: pre-training, the two fine-tuning stages, C
// extraction, optional IPD post-processing, shifted-Laplacian spectral
// clustering and scoring; plus the ablation and partition-benchmark drivers.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dsc/autoencoder.hpp"
#include "dsc/baselines.hpp"
#include "dsc/data_io.hpp"
#include "dsc/error.hpp"
#include "dsc/linalg.hpp"
#include "dsc/metrics.hpp"
#include "dsc/self_expressive.hpp"
#include "dsc/spectral.hpp"

namespace dsc {

inline constexpr int kReportSchemaVersion = 1;

/// Selects the a-priori subspace dimension used by IPD when none is given.
enum class DatasetFamily { generic, faces, digits, objects, synthetic };

inline const char* to_string(DatasetFamily f) {
    switch (f) {
        case DatasetFamily::generic: return "generic";
        case DatasetFamily::faces: return "faces";
        case DatasetFamily::digits: return "digits";
        case DatasetFamily::objects: return "objects";
        case DatasetFamily::synthetic: return "synthetic";
    }
    return "generic";
}

inline DatasetFamily parse_family(std::string_view s) {
    if (s == "generic") return DatasetFamily::generic;
    if (s == "faces") return DatasetFamily::faces;
    if (s == "digits") return DatasetFamily::digits;
    if (s == "objects") return DatasetFamily::objects;
    if (s == "synthetic") return DatasetFamily::synthetic;
    throw ContractError("unknown dataset family: " + std::string(s));
}

struct DatasetSource {
    std::string path = "synth";  // "synth", a .csv file, or an IDX image file
    std::string labels_path;     // IDX label file
    bool has_labels = true;      // CSV: last column is the label
    SyntheticSpec synthetic;
    std::optional<Normalization> normalization;  // unset: none for synthetic data, minmax for files
    DatasetFamily family = DatasetFamily::generic;

    bool is_synthetic() const { return path == "synth"; }
    bool operator==(const DatasetSource&) const = default;
};

/// Faces 9, digits 12, objects 9; synthetic data uses its generator's d.
inline std::optional<int> default_subspace_dim(const DatasetSource& src) {
    switch (src.family) {
        case DatasetFamily::faces: return 9;
        case DatasetFamily::digits: return 12;
        case DatasetFamily::objects: return 9;
        case DatasetFamily::synthetic: return src.synthetic.subspace_dim;
        case DatasetFamily::generic: break;
    }
    if (src.is_synthetic()) return src.synthetic.subspace_dim;
    return std::nullopt;
}

struct StageToggles {
    bool se_joint = true;
    bool se_last = false;
    bool q_loss = true;
    bool ipd = false;
    bool operator==(const StageToggles&) const = default;
};

struct RunConfig {
    std::string name = "LIHFSS-SVDSC";
    DatasetSource dataset;
    PretrainLoss pretrain_loss = PretrainLoss::re;
    StageToggles stages;
    std::optional<int> ipd_dim;  // overrides the family default
    int num_clusters = 0;        // 0: taken from the dataset
    TrainConfig train;
    std::optional<OracleWeights> oracle;
    Activation activation = Activation::tanh;
    WeightInit weight_init = WeightInit::orthogonal;
    std::vector<int> hidden;     // encoder widths after the input; empty: default architecture
    bool stage2_update_encoder = false;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(!(stages.se_joint && stages.se_last),
                        "RunConfig: se_joint and se_last are mutually exclusive");
        detail::require(!ipd_dim || *ipd_dim >= 1, "RunConfig: ipd_dim must be positive");
        detail::require(num_clusters == 0 || num_clusters >= 2, "RunConfig: num_clusters must be at least 2");
        for (int h : hidden) detail::require(h >= 1, "RunConfig: hidden widths must be positive");
        if (oracle)
            detail::require(oracle->lambda1 >= 0.0 && oracle->lambda2 >= 0.0,
                            "RunConfig: oracle weights must be nonnegative");
        train.validate();
    }
};

inline bool operator==(const OracleWeights& a, const OracleWeights& b) {
    return a.lambda1 == b.lambda1 && a.lambda2 == b.lambda2;
}
inline bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return a.learning_rate == b.learning_rate && a.pretrain_epochs == b.pretrain_epochs &&
           a.max_finetune_epochs == b.max_finetune_epochs && a.q_refresh_period == b.q_refresh_period &&
           a.delta == b.delta && a.seed == b.seed && a.dp_pair_sample == b.dp_pair_sample &&
           a.dp_variant == b.dp_variant;
}
inline bool operator==(const SyntheticSpec& a, const SyntheticSpec& b) {
    return a.num_subspaces == b.num_subspaces && a.subspace_dim == b.subspace_dim &&
           a.ambient_dim == b.ambient_dim && a.points_per_subspace == b.points_per_subspace &&
           a.noise_sigma == b.noise_sigma && a.affine_offset == b.affine_offset &&
           a.nonlinear_warp == b.nonlinear_warp && a.orthogonal == b.orthogonal && a.seed == b.seed;
}
inline bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.name == b.name && a.dataset == b.dataset && a.pretrain_loss == b.pretrain_loss &&
           a.stages == b.stages && a.ipd_dim == b.ipd_dim && a.num_clusters == b.num_clusters &&
           a.train == b.train && a.oracle == b.oracle && a.activation == b.activation &&
           a.weight_init == b.weight_init && a.hidden == b.hidden &&
           a.stage2_update_encoder == b.stage2_update_encoder && a.seed == b.seed;
}

struct EpochCounts {
    int pretrain = 0;
    int stage1 = 0;
    int stage2 = 0;
    int oracle = 0;
    bool operator==(const EpochCounts&) const = default;
};

struct RunReport {
    int schema_version = kReportSchemaVersion;
    RunConfig config;
    std::string status = "ok";  // "ok" or "error"
    std::string failed_stage;
    std::string error;
    std::optional<MetricsReport> metrics;
    std::optional<double> subspace_preserving_rate;
    std::vector<double> epsilon_stage1;
    std::vector<double> epsilon_stage2;
    EpochCounts epochs;
    double wall_time_seconds = 0.0;
    int n = 0;
    int num_clusters = 0;
    std::optional<int> ipd_dim_used;
    Labels labels;

    bool ok() const { return status == "ok"; }
    bool operator==(const RunReport&) const = default;
};

/// Network parameters and representation left behind by a run.
struct PipelineArtifacts {
    AutoencoderParams params;
    Matrix c;
};

// A global min-max shift adds the same offset to every point and turns linear
// subspaces into affine ones, so generated data is left as is by default.
inline Normalization resolved_normalization(const DatasetSource& src) {
    if (src.normalization) return *src.normalization;
    const bool generated = src.is_synthetic() || src.family == DatasetFamily::synthetic;
    return generated ? Normalization::none : Normalization::minmax;
}

inline Dataset load_dataset(const DatasetSource& src) {
    Dataset ds;
    if (src.is_synthetic()) {
        ds = generate_synthetic(src.synthetic);
    } else if (src.path.size() >= 4 && src.path.substr(src.path.size() - 4) == ".csv") {
        ds = load_csv(src.path, src.has_labels);
    } else {
        detail::require(!src.labels_path.empty(), "dataset: IDX input needs a labels path");
        ds = load_idx(src.path, src.labels_path);
    }
    return normalize(std::move(ds), resolved_normalization(src));
}

namespace detail {

class StageTracker {
public:
    explicit StageTracker(RunReport& r) : report_(r) {}
    void enter(const char* stage) { report_.failed_stage = stage; }
    void done() { report_.failed_stage.clear(); }

private:
    RunReport& report_;
};

}  // namespace detail

/// Runs the full pipeline on an already loaded dataset. Errors in any stage
/// are caught and reported with that stage's name.
inline RunReport run_pipeline(const RunConfig& cfg, const Dataset& ds, PipelineArtifacts* artifacts = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.config = cfg;
    detail::StageTracker stage(report);
    try {
        stage.enter("config");
        cfg.validate();
        const int k = cfg.num_clusters > 0 ? cfg.num_clusters : ds.num_clusters;
        detail::require(k >= 2, "pipeline: need at least two clusters");
        detail::require(ds.size() >= k, "pipeline: fewer points than clusters");
        const Matrix& x = ds.x;
        const auto n = x.cols();
        report.n = static_cast<int>(n);
        report.num_clusters = k;

        TrainConfig train = cfg.train;
        train.seed = cfg.seed;
        if (cfg.pretrain_loss == PretrainLoss::dp && n > 3000 && !train.dp_pair_sample)
            train.dp_pair_sample = 200000;

        std::vector<int> dims;
        if (cfg.hidden.empty()) {
            dims = default_architecture(static_cast<int>(x.rows()), k);
        } else {
            dims.push_back(static_cast<int>(x.rows()));
            dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
        }

        stage.enter("pretrain");
        AutoencoderParams p = init_params(dims, cfg.seed, cfg.activation, cfg.weight_init);
        PretrainResult pre = pretrain(std::move(p), x, cfg.pretrain_loss, train);
        p = std::move(pre.params);
        report.epochs.pretrain = train.pretrain_epochs;

        Matrix c = Matrix::Zero(n, n);
        if (cfg.oracle) {
            stage.enter("oracle");
            FinetuneResult r = oracle_train(std::move(p), std::move(c), x, *cfg.oracle, cfg.pretrain_loss, k, train);
            p = std::move(r.params);
            c = std::move(r.c);
            report.epochs.oracle = r.epochs;
            report.epsilon_stage1 = std::move(r.epsilon_history);
        } else {
            if (cfg.stages.se_joint || cfg.stages.se_last) {
                stage.enter("stage1");
                const auto mode = cfg.stages.se_joint ? SelfExpression::joint : SelfExpression::last;
                FinetuneResult r = finetune_stage1(std::move(p), std::move(c), x, train, mode);
                p = std::move(r.params);
                c = std::move(r.c);
                report.epochs.stage1 = r.epochs;
                report.epsilon_stage1 = std::move(r.epsilon_history);
            }
            if (cfg.stages.q_loss) {
                stage.enter("stage2");
                FinetuneResult r = finetune_stage2(std::move(p), std::move(c), x, k, train, cfg.stage2_update_encoder);
                p = std::move(r.params);
                c = std::move(r.c);
                report.epochs.stage2 = r.epochs;
                report.epsilon_stage2 = std::move(r.epsilon_history);
            }
        }

        if (cfg.stages.ipd) {
            stage.enter("ipd");
            const std::optional<int> d = cfg.ipd_dim ? cfg.ipd_dim : default_subspace_dim(cfg.dataset);
            detail::require(d.has_value(), "ipd: no subspace dimension given and the dataset family has no default");
            c = ipd_postprocess(c, *d);
            report.ipd_dim_used = d;
        }

        stage.enter("spectral");
        const ClusterIndicator q = spectral_cluster(affinity_from_c(c), k, cfg.seed);
        report.labels = q.labels;

        stage.enter("metrics");
        if (ds.labels) {
            report.metrics = evaluate(*ds.labels, q.labels);
            report.subspace_preserving_rate = c.cwiseAbs().sum() > 0.0 ? subspace_preserving_rate(c, *ds.labels) : 0.0;
        }
        stage.done();
        if (artifacts) *artifacts = PipelineArtifacts{std::move(p), std::move(c)};
    } catch (const std::exception& e) {
        report.status = "error";
        report.error = e.what();
        if (report.failed_stage.empty()) report.failed_stage = "unknown";
    }
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

inline RunReport run_pipeline(const RunConfig& cfg, PipelineArtifacts* artifacts = nullptr) {
    Dataset ds;
    try {
        ds = load_dataset(cfg.dataset);
    } catch (const std::exception& e) {
        RunReport report;
        report.config = cfg;
        report.status = "error";
        report.failed_stage = "load";
        report.error = e.what();
        return report;
    }
    return run_pipeline(cfg, ds, artifacts);
}

struct AblationRow {
    std::string name;
    StageToggles stages;
    std::optional<int> ipd_dim;
};

/// Six rows in the order of the ablation tables: pretrain only, last-layer
/// L_SE, last-layer L_SE + L_Q, joint L_SE, joint L_SE + L_Q, and the latter
/// with IPD.
inline std::vector<AblationRow> default_ablation_grid() {
    return {
        {"pretrain", {false, false, false, false}, std::nullopt},
        {"se_last", {false, true, false, false}, std::nullopt},
        {"se_last+q", {false, true, true, false}, std::nullopt},
        {"se_joint", {true, false, false, false}, std::nullopt},
        {"se_joint+q", {true, false, true, false}, std::nullopt},
        {"se_joint+q+ipd", {true, false, true, true}, std::nullopt},
    };
}

/// One run per row on the same data and seed. A failing row is reported as
/// such; the other rows still run.
inline std::vector<RunReport> run_ablation(const RunConfig& base, const Dataset& ds,
                                           const std::vector<AblationRow>& grid) {
    std::vector<RunReport> out;
    out.reserve(grid.size());
    for (const auto& row : grid) {
        RunConfig cfg = base;
        cfg.name = row.name;
        cfg.stages = row.stages;
        if (row.ipd_dim) cfg.ipd_dim = row.ipd_dim;
        cfg.oracle.reset();
        out.push_back(run_pipeline(cfg, ds));
    }
    return out;
}

inline std::vector<RunReport> run_ablation(const RunConfig& base, const std::vector<AblationRow>& grid) {
    if (grid.empty()) return {};
    const Dataset ds = load_dataset(base.dataset);
    return run_ablation(base, ds, grid);
}

struct MetricsSummary {
    MetricsReport mean;
    MetricsReport stddev;  // population standard deviation
    int trials = 0;
    bool operator==(const MetricsSummary&) const = default;
};

inline MetricsSummary aggregate(const std::vector<MetricsReport>& runs) {
    MetricsSummary s;
    s.trials = static_cast<int>(runs.size());
    if (runs.empty()) return s;
    const double n = static_cast<double>(runs.size());
    for (const auto& r : runs) {
        s.mean.acc += r.acc / n;
        s.mean.nmi += r.nmi / n;
        s.mean.f1 += r.f1 / n;
    }
    for (const auto& r : runs) {
        s.stddev.acc += (r.acc - s.mean.acc) * (r.acc - s.mean.acc) / n;
        s.stddev.nmi += (r.nmi - s.mean.nmi) * (r.nmi - s.mean.nmi) / n;
        s.stddev.f1 += (r.f1 - s.mean.f1) * (r.f1 - s.mean.f1) / n;
    }
    s.stddev.acc = std::sqrt(s.stddev.acc);
    s.stddev.nmi = std::sqrt(s.stddev.nmi);
    s.stddev.f1 = std::sqrt(s.stddev.f1);
    return s;
}

struct BenchmarkEntry {
    std::string algorithm;
    MetricsSummary summary;
    std::vector<MetricsReport> trials;
    int failures = 0;
    bool operator==(const BenchmarkEntry&) const = default;
};

struct BenchmarkReport {
    int schema_version = kReportSchemaVersion;
    std::string dataset;
    int trials = 0;
    int per_cluster = 0;
    std::uint64_t seed = 0;
    std::vector<BenchmarkEntry> entries;
    bool operator==(const BenchmarkReport&) const = default;
};

struct BenchmarkOptions {
    AdmmConfig ssc;                 // lambda ignored when ssc_alpha is set
    std::optional<double> ssc_alpha = 20.0;
    AdmmConfig lrr{.lambda = 0.1};
    std::optional<int> ipd_dim;     // for the "+ipd" variants; falls back to the family default
    RunConfig deep;                 // template for the lihfss-* algorithms
};

/// Algorithm names: ssc, lrr, rtsc, lihfss-re, lihfss-dp, each optionally
/// suffixed with "+ipd".
inline BenchmarkReport run_benchmark(const Dataset& ds, const std::vector<std::string>& algorithms, int trials,
                                     int per_cluster, std::uint64_t seed, const BenchmarkOptions& opt = {}) {
    detail::require(trials >= 1, "run_benchmark: trials must be at least 1");
    BenchmarkReport rep;
    rep.dataset = ds.name;
    rep.trials = trials;
    rep.per_cluster = per_cluster;
    rep.seed = seed;
    for (const auto& a : algorithms) rep.entries.push_back({a, {}, {}, 0});

    std::mt19937_64 seeds(seed);
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = seeds();
        const Dataset part = sample_partition(ds, per_cluster, trial_seed);
        for (auto& entry : rep.entries) {
            std::string_view name = entry.algorithm;
            const bool with_ipd = name.ends_with("+ipd");
            if (with_ipd) name.remove_suffix(4);
            std::optional<int> ipd;
            if (with_ipd) {
                ipd = opt.ipd_dim ? opt.ipd_dim : default_subspace_dim(opt.deep.dataset);
                detail::require(ipd.has_value(), "run_benchmark: +ipd needs a subspace dimension");
            }
            std::optional<MetricsReport> m;
            if (name.starts_with("lihfss-")) {
                RunConfig cfg = opt.deep;
                cfg.name = entry.algorithm;
                cfg.pretrain_loss = parse_pretrain_loss(name.substr(7));
                cfg.stages.ipd = with_ipd;
                if (ipd) cfg.ipd_dim = ipd;
                cfg.seed = trial_seed;
                const RunReport r = run_pipeline(cfg, part);
                if (r.ok()) m = r.metrics;
            } else {
                const BaselineKind kind = parse_baseline(name);
                AdmmConfig admm = kind == BaselineKind::lrr ? opt.lrr : opt.ssc;
                if (kind == BaselineKind::ssc && opt.ssc_alpha) admm.lambda = ssc_default_lambda(part.x, *opt.ssc_alpha);
                try {
                    m = run_baseline(kind, part, admm, ipd, trial_seed).metrics;
                } catch (const std::exception&) {
                    m.reset();
                }
            }
            if (m) entry.trials.push_back(*m);
            else ++entry.failures;
        }
    }
    for (auto& e : rep.entries) e.summary = aggregate(e.trials);
    return rep;
}

}  // namespace dsc
