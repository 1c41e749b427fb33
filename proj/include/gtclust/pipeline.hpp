#pragma once

#include "gtclust/base_cluster.hpp"
#include "gtclust/gat_autoencoder.hpp"
#include "gtclust/hetero_consensus.hpp"
#include "gtclust/ingest.hpp"
#include "gtclust/stability.hpp"
#include "gtclust/validation_metrics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gtclust {

enum class MergeSource { QPad, UMatrix };
enum class Ablation { Full, NmfOnly, CoocOnly };
enum class NodeFeatures { Merged, Data };

struct NmfConfig {
    int r = 0;  // 0 = use k
    int max_iter = 500;
    double tol = 1e-10;
};

struct PipelineConfig {
    std::string input_path;
    InputFormat input_format = InputFormat::GridCsv;
    std::vector<ClusterModelConfig> algorithms;  // templates; k is overridden
    int q = 10;
    int k = 0;  // 0 = elbow
    int elbow_min = 2, elbow_max = 8;
    PostProcessConfig postprocess;
    NmfConfig nmf;
    MergeSource merge_source = MergeSource::QPad;
    Ablation ablation = Ablation::Full;
    TrainConfig autoencoder;
    MeanScope impute = MeanScope::PerVariable;
    NodeFeatures node_features = NodeFeatures::Merged;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    bool dump_matrices = false;
    bool write_checkpoint = false;
    int threads = 1;

    void validate() const;
};

/// Defaults when `algorithms` is empty: one template per family
/// (kmeans, agglomerative/average, spectral).
std::vector<ClusterModelConfig> default_algorithms();

PipelineConfig config_from_json_file(const std::string& path);
PipelineConfig config_from_json(const std::string& text);
/// Fully-resolved echo (defaults materialized, 17-significant-digit floats);
/// feeding it back through config_from_json reproduces the run.
std::string config_to_json(const PipelineConfig& cfg);

/// load -> impute -> reshape -> minmax normalize.
FeatureMatrix prepare_features(const PipelineConfig& cfg);

struct PipelineResult {
    Partition partition;
    MetricReport report;
    int k_used = 0;
    ConsensusMatrix merged;
    Matrix cm_post;       // empty unless the co-association branch ran
    Matrix nmf_q;         // empty unless the NMF branch ran
    TrainResult trained;
    ElbowDiagnostics elbow;
};

/// The full chain on an in-memory (already normalized) matrix. seed
/// overrides cfg.seed so stability harnesses can reseed per run.
PipelineResult run_pipeline_on_matrix(const FeatureMatrix& m, const PipelineConfig& cfg,
                                      std::uint64_t seed);

/// File-based entry: prepares features, runs the chain, writes labels.csv,
/// metrics.json and config_echo.json (plus optional matrices/ dumps and a
/// checkpoint) into cfg.output_dir. Partial outputs are removed on failure;
/// errors carry the failing stage name.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Stability harness around the full chain; writes stability.json and
/// config_echo.json into cfg.output_dir.
StabilityReport run_stability_cmd(const PipelineConfig& cfg, const PerturbationPlan& plan);

/// Adapter for stability::run_stability over this pipeline.
PipelineFn pipeline_fn(const PipelineConfig& cfg);

void write_labels_csv(const Partition& p, const std::string& path);
Partition read_labels_csv(const std::string& path, int expected_rows);

}  // namespace gtclust
