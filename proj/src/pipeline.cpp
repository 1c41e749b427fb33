#include "gtclust/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace gtclust {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string algorithm_to_string(Algorithm a) { return algorithm_name(a); }

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "kmeans") return Algorithm::KMeans;
    if (s == "agglomerative") return Algorithm::Agglomerative;
    if (s == "spectral") return Algorithm::Spectral;
    throw Error("config: unknown algorithm '" + s + "'");
}

Linkage linkage_from_string(const std::string& s) {
    if (s == "average") return Linkage::Average;
    if (s == "ward") return Linkage::Ward;
    throw Error("config: unknown linkage '" + s + "'");
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T def) {
    if (!j.contains(key)) return def;
    return j.at(key).get<T>();
}

struct StageGuard {
    std::string stage;
};

[[noreturn]] void stage_fail(const std::string& stage, const std::exception& e) {
    throw Error("stage " + stage + ": " + e.what());
}

}  // namespace

void PipelineConfig::validate() const {
    if (q < 1) throw Error("config: q must be >= 1");
    if (k < 0) throw Error("config: k must be positive or 0 for elbow");
    if (k == 0 && !(2 <= elbow_min && elbow_min < elbow_max))
        throw Error("config: elbow range must satisfy 2 <= k_min < k_max");
    if (threads < 1) throw Error("config: threads must be >= 1");
    if (postprocess.min_threshold < 0 || postprocess.min_threshold >= 1)
        throw Error("config: postprocess.min_threshold must be in [0,1)");
}

std::vector<ClusterModelConfig> default_algorithms() {
    ClusterModelConfig km;
    km.algorithm = Algorithm::KMeans;
    ClusterModelConfig ag;
    ag.algorithm = Algorithm::Agglomerative;
    ag.linkage = Linkage::Average;
    ClusterModelConfig sp;
    sp.algorithm = Algorithm::Spectral;
    return {km, ag, sp};
}

PipelineConfig config_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    PipelineConfig cfg;

    if (j.contains("input")) {
        cfg.input_path = get_or<std::string>(j["input"], "path", "");
        std::string fmt = get_or<std::string>(j["input"], "format", "grid-csv");
        if (fmt == "grid-csv")
            cfg.input_format = InputFormat::GridCsv;
        else if (fmt == "csv")
            cfg.input_format = InputFormat::Csv2d;
        else
            throw Error("config: unknown input format '" + fmt + "'");
    }

    if (j.contains("algorithms")) {
        for (const auto& a : j["algorithms"]) {
            ClusterModelConfig c;
            c.algorithm = algorithm_from_string(get_or<std::string>(a, "algorithm", "kmeans"));
            c.max_iter = get_or<int>(a, "max_iter", 300);
            c.tol = get_or<double>(a, "tol", 1e-6);
            c.n_init = get_or<int>(a, "n_init", 1);
            if (a.contains("linkage")) c.linkage = linkage_from_string(a["linkage"].get<std::string>());
            cfg.algorithms.push_back(c);
        }
    }

    cfg.q = get_or<int>(j, "q", 10);
    if (j.contains("k")) {
        if (j["k"].is_string()) {
            if (j["k"] != "elbow") throw Error("config: k must be an integer or \"elbow\"");
            cfg.k = 0;
        } else {
            cfg.k = j["k"].get<int>();
        }
    }
    if (j.contains("elbow_range")) {
        cfg.elbow_min = j["elbow_range"][0];
        cfg.elbow_max = j["elbow_range"][1];
    }
    if (j.contains("postprocess")) {
        cfg.postprocess.min_threshold = get_or<double>(j["postprocess"], "min_threshold", 0.3);
        cfg.postprocess.normalize = get_or<bool>(j["postprocess"], "normalize", true);
    }
    if (j.contains("nmf")) {
        cfg.nmf.r = get_or<int>(j["nmf"], "r", 0);
        cfg.nmf.max_iter = get_or<int>(j["nmf"], "max_iter", 500);
        cfg.nmf.tol = get_or<double>(j["nmf"], "tol", 1e-10);
    }
    if (j.contains("merge_source")) {
        std::string s = j["merge_source"];
        if (s == "q_pad")
            cfg.merge_source = MergeSource::QPad;
        else if (s == "u_matrix")
            cfg.merge_source = MergeSource::UMatrix;
        else
            throw Error("config: unknown merge_source '" + s + "'");
    }
    if (j.contains("ablation")) {
        std::string s = j["ablation"];
        if (s == "full")
            cfg.ablation = Ablation::Full;
        else if (s == "nmf_only")
            cfg.ablation = Ablation::NmfOnly;
        else if (s == "cooc_only")
            cfg.ablation = Ablation::CoocOnly;
        else
            throw Error("config: unknown ablation '" + s + "'");
    }
    if (j.contains("autoencoder")) {
        const auto& a = j["autoencoder"];
        cfg.autoencoder.lambda = get_or<double>(a, "lambda", 0.1);
        cfg.autoencoder.epochs = get_or<int>(a, "epochs", 200);
        cfg.autoencoder.step_size = get_or<double>(a, "step_size", 0.01);
        cfg.autoencoder.centroid_refresh = get_or<int>(a, "centroid_refresh", 10);
        cfg.autoencoder.pool_ratio = get_or<double>(a, "pool_ratio", 0.5);
        cfg.autoencoder.tau_edge = get_or<double>(a, "tau_edge", 0.0);
    }
    if (j.contains("impute")) {
        std::string s = j["impute"];
        if (s == "per_variable")
            cfg.impute = MeanScope::PerVariable;
        else if (s == "whole_dataset")
            cfg.impute = MeanScope::WholeDataset;
        else
            throw Error("config: unknown impute scope '" + s + "'");
    }
    if (j.contains("node_features")) {
        std::string s = j["node_features"];
        if (s == "merged")
            cfg.node_features = NodeFeatures::Merged;
        else if (s == "data")
            cfg.node_features = NodeFeatures::Data;
        else
            throw Error("config: unknown node_features '" + s + "'");
    }
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
    cfg.output_dir = get_or<std::string>(j, "output_dir", "out");
    cfg.dump_matrices = get_or<bool>(j, "dump_matrices", false);
    cfg.write_checkpoint = get_or<bool>(j, "checkpoint", false);
    cfg.threads = get_or<int>(j, "threads", 1);
    return cfg;
}

PipelineConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string config_to_json(const PipelineConfig& cfg) {
    const auto& algos = cfg.algorithms.empty() ? default_algorithms() : cfg.algorithms;
    std::string s = "{\n";
    s += "  \"input\": {\"path\": \"" + cfg.input_path + "\", \"format\": \"" +
         (cfg.input_format == InputFormat::GridCsv ? "grid-csv" : "csv") + "\"},\n";
    s += "  \"algorithms\": [";
    for (size_t i = 0; i < algos.size(); ++i) {
        if (i) s += ", ";
        s += "{\"algorithm\": \"" + algorithm_to_string(algos[i].algorithm) + "\", \"max_iter\": " +
             std::to_string(algos[i].max_iter) + ", \"tol\": " + fmt17(algos[i].tol) +
             ", \"n_init\": " + std::to_string(algos[i].n_init) + ", \"linkage\": \"" +
             linkage_name(algos[i].linkage) + "\"}";
    }
    s += "],\n";
    s += "  \"q\": " + std::to_string(cfg.q) + ",\n";
    s += "  \"k\": " + (cfg.k > 0 ? std::to_string(cfg.k) : std::string("\"elbow\"")) + ",\n";
    s += "  \"elbow_range\": [" + std::to_string(cfg.elbow_min) + ", " + std::to_string(cfg.elbow_max) + "],\n";
    s += "  \"postprocess\": {\"min_threshold\": " + fmt17(cfg.postprocess.min_threshold) +
         ", \"normalize\": " + (cfg.postprocess.normalize ? "true" : "false") + "},\n";
    s += "  \"nmf\": {\"r\": " + std::to_string(cfg.nmf.r) + ", \"max_iter\": " + std::to_string(cfg.nmf.max_iter) +
         ", \"tol\": " + fmt17(cfg.nmf.tol) + "},\n";
    s += "  \"merge_source\": \"" + std::string(cfg.merge_source == MergeSource::QPad ? "q_pad" : "u_matrix") +
         "\",\n";
    s += "  \"ablation\": \"" +
         std::string(cfg.ablation == Ablation::Full ? "full"
                     : cfg.ablation == Ablation::NmfOnly ? "nmf_only" : "cooc_only") +
         "\",\n";
    s += "  \"autoencoder\": {\"lambda\": " + fmt17(cfg.autoencoder.lambda) +
         ", \"epochs\": " + std::to_string(cfg.autoencoder.epochs) +
         ", \"step_size\": " + fmt17(cfg.autoencoder.step_size) +
         ", \"centroid_refresh\": " + std::to_string(cfg.autoencoder.centroid_refresh) +
         ", \"pool_ratio\": " + fmt17(cfg.autoencoder.pool_ratio) +
         ", \"tau_edge\": " + fmt17(cfg.autoencoder.tau_edge) + "},\n";
    s += "  \"impute\": \"" +
         std::string(cfg.impute == MeanScope::PerVariable ? "per_variable" : "whole_dataset") + "\",\n";
    s += "  \"node_features\": \"" +
         std::string(cfg.node_features == NodeFeatures::Merged ? "merged" : "data") + "\",\n";
    s += "  \"seed\": " + std::to_string(cfg.seed) + ",\n";
    s += "  \"output_dir\": \"" + cfg.output_dir + "\",\n";
    s += "  \"dump_matrices\": " + std::string(cfg.dump_matrices ? "true" : "false") + ",\n";
    s += "  \"checkpoint\": " + std::string(cfg.write_checkpoint ? "true" : "false") + ",\n";
    s += "  \"threads\": " + std::to_string(cfg.threads) + "\n";
    s += "}\n";
    return s;
}

FeatureMatrix prepare_features(const PipelineConfig& cfg) {
    SpatioTemporalGrid grid = load_grid(cfg.input_path, cfg.input_format);
    grid = impute_mean(grid, cfg.impute);
    return minmax_normalize(reshape_to_2d(grid));
}

PipelineResult run_pipeline_on_matrix(const FeatureMatrix& m, const PipelineConfig& cfg,
                                      std::uint64_t seed) {
    cfg.validate();
    const auto algos = cfg.algorithms.empty() ? default_algorithms() : cfg.algorithms;
    PipelineResult res;

    try {
        res.k_used = cfg.k > 0 ? cfg.k
                               : elbow_select_k(m, cfg.elbow_min, cfg.elbow_max, mix_seed(seed, 101),
                                                &res.elbow);
    } catch (const std::exception& e) {
        stage_fail("select_k", e);
    }
    const int k = res.k_used;

    EnsembleRun consensus_set;
    try {
        for (size_t i = 0; i < algos.size(); ++i) {
            HomogeneousConfig hc;
            hc.base = algos[i];
            hc.base.k = k;
            hc.q = cfg.q;
            hc.threads = cfg.threads;
            hc.seed_stream = mix_seed(seed, 200 + static_cast<std::uint64_t>(i));
            EnsembleRun run = run_homogeneous(m, hc);
            consensus_set.partitions.push_back(consensus_labels(run, k));
        }
    } catch (const std::exception& e) {
        stage_fail("homogeneous_ensemble", e);
    }

    ConsensusMatrix merged;
    try {
        const int T = m.rows();
        ConsensusMatrix cm_post;
        cm_post.kind = ConsensusKind::CoAssociation;
        cm_post.data = Matrix::Zero(T, T);
        if (cfg.ablation != Ablation::NmfOnly) {
            cm_post = post_process(co_association(consensus_set), cfg.postprocess);
            res.cm_post = cm_post.data;
        }

        if (cfg.ablation != Ablation::CoocOnly) {
            const int r = cfg.nmf.r > 0 ? cfg.nmf.r : std::min(k, T);
            NmfConsensusResult nmf = nmf_consensus(consensus_set, r, cfg.nmf.max_iter, cfg.nmf.tol);
            res.nmf_q = nmf.factors.Q;
            if (cfg.merge_source == MergeSource::QPad) {
                merged = pad_and_merge(cm_post, nmf.factors);
            } else {
                Matrix a = cm_post.data + nmf.consensus.data;
                merged.kind = ConsensusKind::Merged;
                merged.data = (a + a.transpose()) / 2.0;
            }
        } else {
            merged.kind = ConsensusKind::Merged;
            merged.data = cm_post.data;
        }
        res.merged = merged;
    } catch (const std::exception& e) {
        stage_fail("heterogeneous_consensus", e);
    }

    try {
        const Matrix& x = cfg.node_features == NodeFeatures::Merged ? merged.data : m.data;
        GraphInput graph = build_graph(merged.data, x, cfg.autoencoder.tau_edge);
        TrainConfig ae = cfg.autoencoder;
        ae.seed = mix_seed(seed, 300);
        ae.k = k;
        res.trained = train(graph, ae);
    } catch (const std::exception& e) {
        stage_fail("autoencoder", e);
    }

    try {
        res.partition = cluster_latent(res.trained.z_full, k, mix_seed(seed, 400));
        res.partition.source_tag = "pipeline:seed=" + std::to_string(seed);
    } catch (const std::exception& e) {
        stage_fail("final_clustering", e);
    }

    try {
        res.report = compute_metrics(m, res.partition);
    } catch (const std::exception& e) {
        stage_fail("validation_metrics", e);
    }
    return res;
}

PipelineFn pipeline_fn(const PipelineConfig& cfg) {
    return [cfg](const FeatureMatrix& m, std::uint64_t seed) {
        return run_pipeline_on_matrix(m, cfg, seed).partition;
    };
}

void write_labels_csv(const Partition& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    out << "t,label\n";
    for (int t = 0; t < p.size(); ++t) out << t << "," << p.labels[static_cast<size_t>(t)] << "\n";
}

Partition read_labels_csv(const std::string& path, int expected_rows) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open labels file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("labels file empty: " + path);
    Partition p;
    int max_label = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw Error("labels file: malformed line '" + line + "'");
        int label = std::stoi(line.substr(comma + 1));
        if (label < 0) throw Error("labels file: negative label");
        p.labels.push_back(label);
        max_label = std::max(max_label, label);
    }
    p.k = max_label + 1;
    if (expected_rows > 0 && p.size() != expected_rows)
        throw Error("labels file has " + std::to_string(p.size()) + " rows, expected " +
                    std::to_string(expected_rows));
    return p;
}

namespace {

struct OutputTracker {
    std::vector<fs::path> created;
    void add(const fs::path& p) { created.push_back(p); }
    void discard_all() {
        for (const auto& p : created) {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    }
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    OutputTracker tracker;
    try {
        FeatureMatrix m;
        try {
            m = prepare_features(cfg);
        } catch (const Error& e) {
            throw;  // already carries context
        } catch (const std::exception& e) {
            stage_fail("ingest", e);
        }

        PipelineResult res = run_pipeline_on_matrix(m, cfg, cfg.seed);

        const fs::path dir(cfg.output_dir);
        const fs::path labels = dir / "labels.csv";
        const fs::path metrics = dir / "metrics.json";
        const fs::path echo = dir / "config_echo.json";
        tracker.add(labels);
        tracker.add(metrics);
        tracker.add(echo);
        write_labels_csv(res.partition, labels.string());
        {
            std::ofstream out(metrics);
            if (!out) throw Error("cannot write " + metrics.string());
            out << res.report.to_json() << "\n";
        }
        {
            std::ofstream out(echo);
            if (!out) throw Error("cannot write " + echo.string());
            out << config_to_json(cfg);
        }
        if (cfg.dump_matrices) {
            const fs::path mats = dir / "matrices";
            tracker.add(mats);
            fs::create_directories(mats);
            write_matrix_csv(res.merged.data, (mats / "merged.csv").string());
            if (res.cm_post.size() > 0) write_matrix_csv(res.cm_post, (mats / "cm_post.csv").string());
            if (res.nmf_q.size() > 0) write_matrix_csv(res.nmf_q, (mats / "nmf_q.csv").string());
        }
        if (cfg.write_checkpoint) {
            const fs::path prefix = dir / "checkpoint";
            tracker.add(dir / "checkpoint.json");
            tracker.add(dir / "checkpoint_params.csv");
            save_checkpoint(res.trained.params, cfg.autoencoder.seed, cfg.autoencoder.epochs,
                            prefix.string());
        }
        return res;
    } catch (...) {
        tracker.discard_all();
        throw;
    }
}

StabilityReport run_stability_cmd(const PipelineConfig& cfg, const PerturbationPlan& plan) {
    cfg.validate();
    FeatureMatrix m;
    try {
        m = prepare_features(cfg);
    } catch (const std::exception& e) {
        stage_fail("ingest", e);
    }

    StabilityReport rep = run_stability(pipeline_fn(cfg), m, plan);

    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    {
        std::ofstream out(dir / "stability.json");
        if (!out) throw Error("cannot write stability.json");
        out << rep.to_json() << "\n";
    }
    {
        std::ofstream out(dir / "config_echo.json");
        if (!out) throw Error("cannot write config_echo.json");
        out << config_to_json(cfg);
    }
    return rep;
}

}  // namespace gtclust
