#pragma once

#include "gtclust/ingest.hpp"
#include "gtclust/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gtclust {

enum class Algorithm { KMeans, Agglomerative, Spectral };
enum class Linkage { Average, Ward };

struct ClusterModelConfig {
    Algorithm algorithm = Algorithm::KMeans;
    int k = 2;
    std::uint64_t seed = 0;
    int max_iter = 300;
    double tol = 1e-6;
    Linkage linkage = Linkage::Average;  // agglomerative only
    int n_init = 1;                      // kmeans restarts

    void validate(int T) const;
};

struct KMeansResult {
    Partition partition;
    Matrix centroids;  // k x F
    double distortion = 0.0;
};

/// Lloyd iterations from kmeans++ seeding. Empty clusters are repaired by
/// reassigning the farthest point of the largest cluster. Distortion is the
/// sum of squared point-to-assigned-centroid distances.
KMeansResult kmeans(const FeatureMatrix& m, const ClusterModelConfig& cfg);

/// Bottom-up merges under average or Ward linkage on Euclidean distances,
/// cut at k clusters. Ties merge the lexicographically smallest (i,j) pair.
Partition agglomerative(const FeatureMatrix& m, const ClusterModelConfig& cfg);

/// Agglomerative clustering on a precomputed symmetric dissimilarity matrix
/// (Ward interprets entries as its squared form).
Partition agglomerative_precomputed(const Matrix& dist, int k, Linkage linkage);

/// Gaussian affinity (sigma = median pairwise distance), symmetric
/// normalized Laplacian, bottom-k Jacobi eigenvectors, row-normalized
/// embedding clustered with kmeans.
Partition spectral(const FeatureMatrix& m, const ClusterModelConfig& cfg);

/// Runs one configured algorithm; tags the partition with algorithm + seed.
Partition run_base(const FeatureMatrix& m, const ClusterModelConfig& cfg);

struct ElbowDiagnostics {
    std::vector<double> distortions;  // index 0 = k_min
    std::vector<std::string> warnings;
};

/// Distortion-curve knee: the k in [k_min, k_max] with maximum perpendicular
/// distance to the chord between the curve endpoints; ties pick the smallest
/// k. A gross monotonicity violation (>5% increase) is recorded as a warning.
int elbow_select_k(const FeatureMatrix& m, int k_min, int k_max, std::uint64_t seed,
                   ElbowDiagnostics* diag = nullptr);

std::string algorithm_name(Algorithm a);
std::string linkage_name(Linkage l);

}  // namespace gtclust
