#include "gtclust/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

namespace {

using namespace gtclust;

SpatioTemporalGrid grid_from_matrix(const FeatureMatrix& m, const std::vector<std::string>& names) {
    SpatioTemporalGrid g;
    g.n = m.cols();
    g.T = m.rows();
    g.L = 1;
    g.W = 1;
    g.variable_names = names;
    g.values.resize(static_cast<size_t>(g.n) * g.T);
    for (int v = 0; v < g.n; ++v)
        for (int t = 0; t < g.T; ++t) g.at(v, t, 0, 0) = m.data(t, v);
    return g;
}

int run_command(PipelineConfig cfg) {
    PipelineResult res = run_pipeline(cfg);
    std::cout << "k=" << res.k_used << " silhouette=" << res.report.silhouette << "\n";
    std::cout << "outputs written to " << cfg.output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid ensemble graph temporal clustering"};
    app.require_subcommand(1);

    std::string config_path;
    PipelineConfig cfg;

    // shared pipeline flags (flags win over the config file)
    std::string opt_input, opt_format, opt_k, opt_ablation, opt_merge, opt_impute, opt_node_features,
        opt_out;
    std::uint64_t opt_seed = 0;
    int opt_q = 0, opt_threads = 0, opt_epochs = 0;
    bool opt_dump = false, opt_checkpoint = false;

    auto add_pipeline_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "pipeline config JSON");
        cmd->add_option("--input", opt_input, "input data file");
        cmd->add_option("--format", opt_format, "input format: grid-csv | csv");
        cmd->add_option("--k", opt_k, "cluster count or 'elbow'");
        cmd->add_option("--q", opt_q, "homogeneous ensemble size");
        cmd->add_option("--seed", opt_seed, "master seed");
        cmd->add_option("--out", opt_out, "output directory");
        cmd->add_option("--ablation", opt_ablation, "full | nmf_only | cooc_only");
        cmd->add_option("--merge-source", opt_merge, "q_pad | u_matrix");
        cmd->add_option("--impute", opt_impute, "per_variable | whole_dataset");
        cmd->add_option("--node-features", opt_node_features, "merged | data");
        cmd->add_option("--threads", opt_threads, "parallel map width (default 1)");
        cmd->add_option("--epochs", opt_epochs, "autoencoder epochs");
        cmd->add_flag("--dump-matrices", opt_dump, "dump consensus matrices as CSV");
        cmd->add_flag("--checkpoint", opt_checkpoint, "write an autoencoder checkpoint");
    };

    auto resolve_config = [&](CLI::App* cmd) {
        if (!config_path.empty()) cfg = config_from_json_file(config_path);
        if (cmd->count("--input")) cfg.input_path = opt_input;
        if (cmd->count("--format")) {
            if (opt_format == "grid-csv")
                cfg.input_format = InputFormat::GridCsv;
            else if (opt_format == "csv")
                cfg.input_format = InputFormat::Csv2d;
            else
                throw Error("unknown format '" + opt_format + "'");
        }
        if (cmd->count("--k")) cfg.k = opt_k == "elbow" ? 0 : std::stoi(opt_k);
        if (cmd->count("--q")) cfg.q = opt_q;
        if (cmd->count("--seed")) cfg.seed = opt_seed;
        if (cmd->count("--out")) cfg.output_dir = opt_out;
        if (cmd->count("--ablation")) {
            if (opt_ablation == "full")
                cfg.ablation = Ablation::Full;
            else if (opt_ablation == "nmf_only")
                cfg.ablation = Ablation::NmfOnly;
            else if (opt_ablation == "cooc_only")
                cfg.ablation = Ablation::CoocOnly;
            else
                throw Error("unknown ablation '" + opt_ablation + "'");
        }
        if (cmd->count("--merge-source")) {
            if (opt_merge == "q_pad")
                cfg.merge_source = MergeSource::QPad;
            else if (opt_merge == "u_matrix")
                cfg.merge_source = MergeSource::UMatrix;
            else
                throw Error("unknown merge source '" + opt_merge + "'");
        }
        if (cmd->count("--impute"))
            cfg.impute = opt_impute == "whole_dataset" ? MeanScope::WholeDataset : MeanScope::PerVariable;
        if (cmd->count("--node-features"))
            cfg.node_features = opt_node_features == "data" ? NodeFeatures::Data : NodeFeatures::Merged;
        if (cmd->count("--threads")) cfg.threads = opt_threads;
        if (cmd->count("--epochs")) cfg.autoencoder.epochs = opt_epochs;
        if (cmd->count("--dump-matrices")) cfg.dump_matrices = opt_dump;
        if (cmd->count("--checkpoint")) cfg.write_checkpoint = opt_checkpoint;
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run the full clustering pipeline");
    add_pipeline_flags(run_cmd);

    CLI::App* stab_cmd = app.add_subcommand("stability", "rerun/perturbation stability harness");
    add_pipeline_flags(stab_cmd);
    int plan_runs = 20;
    double plan_fraction = 0.9;
    std::string plan_mode = "reseed";
    std::uint64_t plan_seed = 0;
    stab_cmd->add_option("--runs", plan_runs, "number of runs (>= 2)");
    stab_cmd->add_option("--mode", plan_mode, "reseed | subsample");
    stab_cmd->add_option("--fraction", plan_fraction, "subsample fraction");
    stab_cmd->add_option("--plan-seed", plan_seed, "perturbation seed");

    CLI::App* synth_cmd = app.add_subcommand("synth", "emit a seeded synthetic dataset");
    SyntheticSpec spec;
    spec.T = 300;
    spec.F = 20;
    spec.k_true = 3;
    spec.separation = 10.0;
    spec.noise_sigma = 0.5;
    std::string synth_layout = "contiguous", synth_out = "synthetic.grid.csv", synth_labels;
    synth_cmd->add_option("--T", spec.T, "time steps");
    synth_cmd->add_option("--F", spec.F, "features");
    synth_cmd->add_option("--k", spec.k_true, "true regime count");
    synth_cmd->add_option("--separation", spec.separation, "minimum centroid distance");
    synth_cmd->add_option("--sigma", spec.noise_sigma, "noise standard deviation");
    synth_cmd->add_option("--layout", synth_layout, "contiguous | interleaved");
    synth_cmd->add_option("--seed", spec.seed, "generator seed");
    synth_cmd->add_option("--out", synth_out, "output grid-csv path");
    synth_cmd->add_option("--labels", synth_labels, "optional ground-truth labels path");

    CLI::App* metrics_cmd = app.add_subcommand("metrics", "score an existing labels.csv");
    std::string metrics_data, metrics_format = "grid-csv", metrics_labels, metrics_out;
    metrics_cmd->add_option("--data", metrics_data, "data file")->required();
    metrics_cmd->add_option("--format", metrics_format, "grid-csv | csv");
    metrics_cmd->add_option("--labels", metrics_labels, "labels.csv to score")->required();
    metrics_cmd->add_option("--out", metrics_out, "write the report here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            resolve_config(run_cmd);
            return run_command(cfg);
        }
        if (stab_cmd->parsed()) {
            resolve_config(stab_cmd);
            PerturbationPlan plan;
            plan.runs = plan_runs;
            plan.subsample_fraction = plan_fraction;
            plan.base_seed = plan_seed;
            if (plan_mode == "reseed")
                plan.mode = PerturbationMode::Reseed;
            else if (plan_mode == "subsample")
                plan.mode = PerturbationMode::Subsample;
            else
                throw Error("unknown mode '" + plan_mode + "'");
            StabilityReport rep = run_stability_cmd(cfg, plan);
            std::cout << rep.to_json() << "\n";
            return 0;
        }
        if (synth_cmd->parsed()) {
            if (synth_layout == "interleaved")
                spec.regime_layout = RegimeLayout::Interleaved;
            else if (synth_layout != "contiguous")
                throw Error("unknown layout '" + synth_layout + "'");
            auto [m, truth] = generate_synthetic(spec);
            std::vector<std::string> names;
            for (int j = 0; j < spec.F; ++j) names.push_back("f" + std::to_string(j));
            write_grid(grid_from_matrix(m, names), synth_out);
            if (!synth_labels.empty()) write_labels_csv(truth, synth_labels);
            std::cout << "wrote " << synth_out << "\n";
            return 0;
        }
        if (metrics_cmd->parsed()) {
            PipelineConfig mc;
            mc.input_path = metrics_data;
            mc.input_format = metrics_format == "csv" ? InputFormat::Csv2d : InputFormat::GridCsv;
            FeatureMatrix m = prepare_features(mc);
            Partition p = read_labels_csv(metrics_labels, m.rows());
            MetricReport rep = compute_metrics(m, p);
            if (metrics_out.empty()) {
                std::cout << rep.to_json() << "\n";
            } else {
                std::ofstream out(metrics_out);
                if (!out) throw Error("cannot write " + metrics_out);
                out << rep.to_json() << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
