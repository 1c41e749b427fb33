#pragma once

#include "gtclust/base_cluster.hpp"
#include "gtclust/types.hpp"

#include <optional>
#include <vector>

namespace gtclust {

/// Per-run overrides applied cyclically across the q runs.
struct ParamJitter {
    std::optional<Linkage> linkage;
    std::optional<int> n_init;
    std::optional<int> max_iter;
    std::optional<double> tol;
};

struct HomogeneousConfig {
    ClusterModelConfig base;
    int q = 10;
    std::uint64_t seed_stream = 0;
    std::vector<ParamJitter> param_jitter;  // empty = seed-only variation
    int threads = 1;  // parallel-map width; results are stored by run index
};

struct EnsembleRun {
    std::vector<Partition> partitions;

    int members() const { return static_cast<int>(partitions.size()); }
    int length() const { return partitions.empty() ? 0 : partitions.front().size(); }
    void validate() const;
};

/// Executes the base algorithm q times; run i is seeded with
/// mix_seed(seed_stream, i) so changing q does not perturb earlier runs.
EnsembleRun run_homogeneous(const FeatureMatrix& m, const HomogeneousConfig& cfg);

/// Reduces an ensemble to final labels: average-linkage agglomerative cut at
/// k on the distance 1 - CM, where CM is the run's co-association matrix.
Partition consensus_labels(const EnsembleRun& run, int k);

}  // namespace gtclust
