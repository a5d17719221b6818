// Command-line front end: run, ablate, bench, synth, baseline.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsc/dsc.hpp"

namespace {

using namespace dsc;

struct DataOptions {
    std::string config;
    std::string dataset;
    std::string labels;
    std::string family;
    std::string normalization;
    bool no_labels = false;
    int clusters = 0;
    std::optional<std::uint64_t> seed;
    std::string out = "-";
    std::string format = "json";

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
        app->add_option("--dataset", dataset, "\"synth\", a .csv file or an IDX image file");
        app->add_option("--labels", labels, "IDX label file");
        app->add_option("--family", family, "faces|digits|objects|synthetic|generic (sets the IPD default)");
        app->add_option("--normalize", normalization, "none|unit_column|minmax");
        app->add_flag("--no-labels", no_labels, "CSV input has no label column");
        app->add_option("--clusters", clusters, "number of clusters (default: from the data)");
        app->add_option("--seed", seed, "random seed");
        app->add_option("--out", out, "output path, - for stdout");
        app->add_option("--format", format, "json|csv|markdown")->check(CLI::IsMember({"json", "csv", "markdown"}));
    }

    RunConfig run_config() const {
        RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
        if (!dataset.empty()) cfg.dataset.path = dataset;
        if (!labels.empty()) cfg.dataset.labels_path = labels;
        if (!family.empty()) cfg.dataset.family = parse_family(family);
        if (!normalization.empty()) cfg.dataset.normalization = parse_normalization(normalization);
        if (no_labels) cfg.dataset.has_labels = false;
        if (clusters > 0) cfg.num_clusters = clusters;
        if (seed) cfg.seed = *seed;
        return cfg;
    }
};

std::optional<OracleWeights> parse_oracle(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw ContractError("--oracle expects l1,l2");
    return OracleWeights{std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

int fail(const std::string& stage, const std::string& what) {
    std::cerr << "error in stage " << stage << ": " << what << '\n';
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep subspace clustering with label-independent stopping"};
    app.require_subcommand(1);

    // run
    DataOptions run_opt;
    std::string pretrain, oracle, checkpoint;
    std::optional<int> ipd;
    auto* run = app.add_subcommand("run", "train and cluster one dataset");
    run_opt.attach(run);
    run->add_option("--pretrain", pretrain, "re|dp")->check(CLI::IsMember({"re", "dp"}));
    run->add_option("--ipd", ipd, "keep the d largest coefficients per column of C");
    run->add_option("--oracle", oracle, "composite-loss weights l1,l2 (needs tuning, not label free)");
    run->add_option("--checkpoint", checkpoint, "write network parameters and C to this file");

    // ablate
    DataOptions abl_opt;
    std::string abl_pretrain;
    std::optional<int> abl_ipd;
    auto* ablate = app.add_subcommand("ablate", "run the six-row stage ablation");
    abl_opt.attach(ablate);
    ablate->add_option("--pretrain", abl_pretrain, "re|dp")->check(CLI::IsMember({"re", "dp"}));
    ablate->add_option("--ipd", abl_ipd, "IPD dimension for the last row");

    // bench
    DataOptions bench_opt;
    std::vector<std::string> algorithms = {"ssc", "ssc+ipd", "lrr", "lrr+ipd", "rtsc", "rtsc+ipd",
                                           "lihfss-re", "lihfss-re+ipd", "lihfss-dp", "lihfss-dp+ipd"};
    int trials = 10, per_cluster = 0;
    std::optional<int> bench_ipd;
    std::optional<double> ssc_lambda;
    double lrr_lambda = 0.1;
    auto* bench = app.add_subcommand("bench", "mean and std over random class-balanced partitions");
    bench_opt.attach(bench);
    bench->add_option("--algorithms", algorithms, "algorithms to compare")->delimiter(',');
    bench->add_option("--trials", trials, "number of partitions")->check(CLI::PositiveNumber);
    bench->add_option("--per-cluster", per_cluster, "points drawn per class")->required()->check(CLI::PositiveNumber);
    bench->add_option("--ipd", bench_ipd, "IPD dimension for +ipd variants");
    bench->add_option("--lambda", ssc_lambda, "fixed SSC lambda (default: 20 / mu per partition)");
    bench->add_option("--lrr-lambda", lrr_lambda, "LRR lambda");

    // synth
    SyntheticSpec spec;
    std::string synth_out;
    bool non_orthogonal = false;
    auto* synth = app.add_subcommand("synth", "write a union-of-subspaces dataset as CSV");
    synth->add_option("--subspaces", spec.num_subspaces);
    synth->add_option("--dim", spec.subspace_dim);
    synth->add_option("--ambient", spec.ambient_dim);
    synth->add_option("--per-subspace", spec.points_per_subspace);
    synth->add_option("--noise", spec.noise_sigma);
    synth->add_flag("--affine", spec.affine_offset);
    synth->add_flag("--warp", spec.nonlinear_warp);
    synth->add_flag("--non-orthogonal", non_orthogonal);
    synth->add_option("--seed", spec.seed);
    synth->add_option("--out", synth_out, "CSV path")->required();

    // baseline
    DataOptions base_opt;
    std::string method = "ssc";
    std::optional<double> lambda;
    std::optional<int> base_ipd;
    auto* baseline = app.add_subcommand("baseline", "run SSC, LRR or RTSC");
    base_opt.attach(baseline);
    baseline->add_option("--method", method, "ssc|lrr|rtsc")->check(CLI::IsMember({"ssc", "lrr", "rtsc"}));
    baseline->add_option("--lambda", lambda, "regularisation weight (SSC default: 20 / mu, LRR default: 0.1)");
    baseline->add_option("--ipd", base_ipd, "keep the d largest coefficients per column");

    CLI11_PARSE(app, argc, argv);

    std::string stage = "config";
    try {
        if (*run) {
            RunConfig cfg = run_opt.run_config();
            if (!pretrain.empty()) cfg.pretrain_loss = parse_pretrain_loss(pretrain);
            if (ipd) {
                cfg.ipd_dim = ipd;
                cfg.stages.ipd = true;
            }
            if (auto w = parse_oracle(oracle)) cfg.oracle = w;
            PipelineArtifacts art;
            const RunReport r = run_pipeline(cfg, checkpoint.empty() ? nullptr : &art);
            stage = "report";
            write_text(run_opt.out, render(r, parse_format(run_opt.format)));
            if (!r.ok()) return fail(r.failed_stage, r.error);
            if (!checkpoint.empty()) {
                stage = "checkpoint";
                save_checkpoint(checkpoint, art.params, art.c);
            }
            return 0;
        }
        if (*ablate) {
            RunConfig cfg = abl_opt.run_config();
            if (!abl_pretrain.empty()) cfg.pretrain_loss = parse_pretrain_loss(abl_pretrain);
            stage = "load";
            const Dataset ds = load_dataset(cfg.dataset);
            auto grid = default_ablation_grid();
            if (abl_ipd) grid.back().ipd_dim = abl_ipd;
            stage = "ablation";
            const auto rows = run_ablation(cfg, ds, grid);
            stage = "report";
            write_text(abl_opt.out, render(rows, parse_format(abl_opt.format)));
            for (const auto& r : rows)
                if (!r.ok()) std::cerr << "row " << r.config.name << " failed in stage " << r.failed_stage << ": "
                                       << r.error << '\n';
            return 0;
        }
        if (*bench) {
            BenchmarkOptions opt;
            opt.deep = bench_opt.run_config();
            opt.ipd_dim = bench_ipd;
            if (ssc_lambda) {
                opt.ssc_alpha.reset();
                opt.ssc.lambda = *ssc_lambda;
            }
            opt.lrr.lambda = lrr_lambda;
            stage = "load";
            const Dataset ds = load_dataset(opt.deep.dataset);
            stage = "bench";
            const auto rep = run_benchmark(ds, algorithms, trials, per_cluster, opt.deep.seed, opt);
            stage = "report";
            write_text(bench_opt.out, render(rep, parse_format(bench_opt.format)));
            return 0;
        }
        if (*synth) {
            spec.orthogonal = !non_orthogonal;
            stage = "synth";
            write_csv(synth_out, generate_synthetic(spec));
            return 0;
        }
        if (*baseline) {
            const RunConfig cfg = base_opt.run_config();
            stage = "load";
            Dataset ds = load_dataset(cfg.dataset);
            if (cfg.num_clusters > 0) ds.num_clusters = cfg.num_clusters;
            const BaselineKind kind = parse_baseline(method);
            AdmmConfig admm;
            admm.lambda = lambda ? *lambda : kind == BaselineKind::ssc ? ssc_default_lambda(ds.x) : 0.1;
            std::optional<int> d = base_ipd;
            stage = method;
            const auto t0 = std::chrono::steady_clock::now();
            const BaselineRun r = run_baseline(kind, ds, admm, d, cfg.seed);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            stage = "report";
            const ReportFormat fmt = parse_format(base_opt.format);
            std::string text;
            if (fmt == ReportFormat::json) {
                json j = {{"schema_version", kReportSchemaVersion}, {"method", method}, {"lambda", admm.lambda},
                          {"ipd_dim", detail::opt_json(d)}, {"converged", r.converged},
                          {"iterations", r.iterations}, {"metrics", detail::opt_json(r.metrics)},
                          {"wall_time_seconds", secs}, {"labels", r.labels}};
                if (r.representation && ds.labels)
                    j["subspace_preserving_rate"] = subspace_preserving_rate(*r.representation, *ds.labels);
                text = j.dump(2) + "\n";
            } else {
                RunReport rr;
                rr.config.name = method;
                rr.metrics = r.metrics;
                rr.labels = r.labels;
                rr.wall_time_seconds = secs;
                text = render(rr, fmt);
            }
            write_text(base_opt.out, text);
            return 0;
        }
    } catch (const std::exception& e) {
        return fail(stage, e.what());
    }
    return 0;
}
