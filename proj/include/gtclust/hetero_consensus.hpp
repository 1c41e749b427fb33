#pragma once

#include "gtclust/homo_ensemble.hpp"
#include "gtclust/types.hpp"

#include <string>
#include <vector>

namespace gtclust {

enum class ConsensusKind { CoAssociation, Connectivity, Merged };

struct ConsensusMatrix {
    Matrix data;
    ConsensusKind kind = ConsensusKind::CoAssociation;

    int size() const { return static_cast<int>(data.rows()); }
};

struct NmfFactors {
    Matrix Q;  // T x r, non-negative
    Matrix S;  // r x r, non-negative
    int r = 0;
    std::vector<double> objective_trace;
};

struct PostProcessConfig {
    double min_threshold = 0.3;
    bool normalize = true;
};

/// CM_ij = fraction of member partitions co-clustering i and j.
ConsensusMatrix co_association(const EnsembleRun& partitions);

/// Symmetric degree normalization D^{-1/2} CM D^{-1/2} (rows with zero sum
/// are left as-is), then entries below min_threshold drop to zero.
ConsensusMatrix post_process(const ConsensusMatrix& cm, const PostProcessConfig& cfg);

/// Count of ordered pairs co-clustered in p1 but separated in p2. Not
/// symmetric in its arguments.
long long partition_distance(const Partition& p1, const Partition& p2);

/// 0/1 co-membership matrix of a single partition.
ConsensusMatrix connectivity(const Partition& p);

struct NmfConsensusResult {
    NmfFactors factors;
    ConsensusMatrix consensus;  // U = Q S Q^T
};

/// Symmetric tri-factorization of the mean member connectivity matrix by
/// multiplicative updates from an NNDSVD start. The objective trace
/// ||M - QSQ^T||_F^2 is kept non-increasing; an update that would raise it
/// beyond the per-step slack is rolled back and iteration stops.
NmfConsensusResult nmf_consensus(const EnsembleRun& partitions, int r, int max_iter = 500,
                                 double tol = 1e-10);

/// Zero-pads Q to T x T on the right, adds it to cm and symmetrizes:
/// Merged = (A + A^T)/2 with A = cm + pad(Q).
ConsensusMatrix pad_and_merge(const ConsensusMatrix& cm, const NmfFactors& f);

/// Square matrix dump: CSV, no header, 17 significant digits.
void write_matrix_csv(const Matrix& m, const std::string& path);

}  // namespace gtclust
