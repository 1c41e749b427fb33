#pragma once

#include "gtclust/ingest.hpp"
#include "gtclust/types.hpp"

#include <string>

namespace gtclust {

struct MetricReport {
    double silhouette = 0.0;
    double davies_bouldin = 0.0;
    double calinski_harabasz = 0.0;
    double avg_rmse = 0.0;
    double avg_variance = 0.0;
    double inter_cluster_distance = 0.0;
    int k = 0;
    int n = 0;

    /// Keys: silhouette, db, ch, rmse, var, icd, k, n. Non-finite values
    /// serialize as the string "inf".
    std::string to_json() const;
};

double silhouette(const FeatureMatrix& m, const Partition& p);
double davies_bouldin(const FeatureMatrix& m, const Partition& p);
double calinski_harabasz(const FeatureMatrix& m, const Partition& p);
double avg_rmse(const FeatureMatrix& m, const Partition& p);
double avg_variance(const FeatureMatrix& m, const Partition& p);

/// Mean over cluster pairs of the minimum cross-cluster point distance.
double inter_cluster_distance(const FeatureMatrix& m, const Partition& p);

MetricReport compute_metrics(const FeatureMatrix& m, const Partition& p);

}  // namespace gtclust
