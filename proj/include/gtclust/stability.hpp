#pragma once

#include "gtclust/ingest.hpp"
#include "gtclust/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gtclust {

enum class PerturbationMode { Reseed, Subsample };

struct PerturbationPlan {
    PerturbationMode mode = PerturbationMode::Reseed;
    int runs = 20;
    double subsample_fraction = 0.9;
    std::uint64_t base_seed = 0;
};

struct StabilityComparison {
    double ota = 0.0;
    double fom = 0.0;
    double apn = 0.0;
};

struct StabilityReport {
    double ota_mean = 0.0;
    double fom_mean = 0.0;
    double apn_mean = 0.0;
    std::vector<StabilityComparison> per_run;

    /// Keys: ota, fom, apn plus a per_run array.
    std::string to_json() const;
};

/// Optimal transport cost between two clusterings: masses are cluster
/// fractions, costs are Euclidean centroid distances, solved exactly.
/// Requires the same number of non-empty clusters on both sides.
double ota(const FeatureMatrix& m, const Partition& p1, const Partition& p2);

/// Mean absolute difference between the assigned-centroid pairwise distance
/// matrices of the two clusterings (over all ordered pairs).
double fom(const FeatureMatrix& m, const Partition& p_base, const Partition& p_pert);

/// Fraction of points whose labels differ. With align=true p2 is first
/// relabeled by the maximum-agreement assignment.
double apn(const Partition& p1, const Partition& p2, bool align = false);

using PipelineFn = std::function<Partition(const FeatureMatrix&, std::uint64_t seed)>;

/// Run 0 is the base; each later run is perturbed (reseed or row subsample)
/// and compared to the base with all three metrics. Subsample comparisons
/// are restricted to the retained indices.
StabilityReport run_stability(const PipelineFn& pipeline, const FeatureMatrix& m,
                              const PerturbationPlan& plan);

}  // namespace gtclust
