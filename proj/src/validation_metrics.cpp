#include "gtclust/validation_metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace gtclust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ClusterStats {
    Matrix centroids;        // k x F
    std::vector<int> sizes;  // k
};

ClusterStats cluster_stats(const Matrix& x, const Partition& p) {
    const int T = static_cast<int>(x.rows());
    ClusterStats s;
    s.centroids = Matrix::Zero(p.k, x.cols());
    s.sizes.assign(static_cast<size_t>(p.k), 0);
    for (int i = 0; i < T; ++i) {
        s.centroids.row(p.labels[static_cast<size_t>(i)]) += x.row(i);
        s.sizes[static_cast<size_t>(p.labels[static_cast<size_t>(i)])]++;
    }
    for (int c = 0; c < p.k; ++c) {
        if (s.sizes[static_cast<size_t>(c)] == 0) throw Error("metrics: empty cluster " + std::to_string(c));
        s.centroids.row(c) /= s.sizes[static_cast<size_t>(c)];
    }
    return s;
}

void check_lengths(const FeatureMatrix& m, const Partition& p) {
    if (m.rows() != p.size()) throw Error("metrics: partition length does not match matrix rows");
}

std::string json_double(double v) {
    if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
    if (std::isnan(v)) return "\"nan\"";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double silhouette(const FeatureMatrix& m, const Partition& p) {
    check_lengths(m, p);
    if (p.k < 2) throw Error("silhouette: needs k >= 2");
    const Matrix& x = m.data;
    const int T = static_cast<int>(x.rows());

    std::vector<int> sizes(static_cast<size_t>(p.k), 0);
    for (int l : p.labels) sizes[static_cast<size_t>(l)]++;

    double total = 0.0;
    std::vector<double> mean_to_cluster(static_cast<size_t>(p.k));
    for (int i = 0; i < T; ++i) {
        const int ci = p.labels[static_cast<size_t>(i)];
        if (sizes[static_cast<size_t>(ci)] == 1) continue;  // singleton contributes 0

        std::fill(mean_to_cluster.begin(), mean_to_cluster.end(), 0.0);
        for (int j = 0; j < T; ++j) {
            if (j == i) continue;
            mean_to_cluster[static_cast<size_t>(p.labels[static_cast<size_t>(j)])] +=
                (x.row(i) - x.row(j)).norm();
        }
        const double a = mean_to_cluster[static_cast<size_t>(ci)] / (sizes[static_cast<size_t>(ci)] - 1);
        double b = kInf;
        for (int c = 0; c < p.k; ++c) {
            if (c == ci || sizes[static_cast<size_t>(c)] == 0) continue;
            b = std::min(b, mean_to_cluster[static_cast<size_t>(c)] / sizes[static_cast<size_t>(c)]);
        }
        const double denom = std::max(a, b);
        total += denom > 0 ? (b - a) / denom : 0.0;
    }
    return total / T;
}

double davies_bouldin(const FeatureMatrix& m, const Partition& p) {
    check_lengths(m, p);
    if (p.k < 2) throw Error("davies_bouldin: needs k >= 2");
    const Matrix& x = m.data;
    ClusterStats st = cluster_stats(x, p);

    Vector scatter = Vector::Zero(p.k);
    for (int i = 0; i < x.rows(); ++i) {
        int c = p.labels[static_cast<size_t>(i)];
        scatter(c) += (x.row(i) - st.centroids.row(c)).norm();
    }
    for (int c = 0; c < p.k; ++c) scatter(c) /= st.sizes[static_cast<size_t>(c)];

    double sum = 0.0;
    for (int i = 0; i < p.k; ++i) {
        double worst = 0.0;
        for (int j = 0; j < p.k; ++j) {
            if (j == i) continue;
            double d = (st.centroids.row(i) - st.centroids.row(j)).norm();
            double ratio = d > 0 ? (scatter(i) + scatter(j)) / d : kInf;
            worst = std::max(worst, ratio);
        }
        sum += worst;
    }
    return sum / p.k;
}

double calinski_harabasz(const FeatureMatrix& m, const Partition& p) {
    check_lengths(m, p);
    const int T = m.rows();
    if (p.k < 2) throw Error("calinski_harabasz: needs k >= 2");
    if (T <= p.k) throw Error("calinski_harabasz: needs T > k");
    const Matrix& x = m.data;
    ClusterStats st = cluster_stats(x, p);

    Eigen::RowVectorXd grand = x.colwise().mean();
    double between = 0.0;
    for (int c = 0; c < p.k; ++c)
        between += st.sizes[static_cast<size_t>(c)] * (st.centroids.row(c) - grand).squaredNorm();
    double within = 0.0;
    for (int i = 0; i < T; ++i)
        within += (x.row(i) - st.centroids.row(p.labels[static_cast<size_t>(i)])).squaredNorm();

    if (within == 0.0) return kInf;
    return (between / (p.k - 1)) / (within / (T - p.k));
}

double avg_rmse(const FeatureMatrix& m, const Partition& p) {
    check_lengths(m, p);
    const Matrix& x = m.data;
    ClusterStats st = cluster_stats(x, p);

    Vector sq = Vector::Zero(p.k);
    for (int i = 0; i < x.rows(); ++i) {
        int c = p.labels[static_cast<size_t>(i)];
        sq(c) += (x.row(i) - st.centroids.row(c)).squaredNorm();
    }
    double sum = 0.0;
    for (int c = 0; c < p.k; ++c) sum += std::sqrt(sq(c) / st.sizes[static_cast<size_t>(c)]);
    return sum / p.k;
}

double avg_variance(const FeatureMatrix& m, const Partition& p) {
    check_lengths(m, p);
    const Matrix& x = m.data;
    ClusterStats st = cluster_stats(x, p);

    Vector sq = Vector::Zero(p.k);
    for (int i = 0; i < x.rows(); ++i) {
        int c = p.labels[static_cast<size_t>(i)];
        sq(c) += (x.row(i) - st.centroids.row(c)).squaredNorm();
    }
    double sum = 0.0;
    for (int c = 0; c < p.k; ++c) sum += sq(c) / st.sizes[static_cast<size_t>(c)];
    return sum / p.k;
}

double inter_cluster_distance(const FeatureMatrix& m, const Partition& p) {
    check_lengths(m, p);
    if (p.k < 2) throw Error("inter_cluster_distance: needs k >= 2");
    const Matrix& x = m.data;
    const int T = static_cast<int>(x.rows());

    Matrix min_cross = Matrix::Constant(p.k, p.k, kInf);
    for (int i = 0; i < T; ++i)
        for (int j = i + 1; j < T; ++j) {
            int ci = p.labels[static_cast<size_t>(i)], cj = p.labels[static_cast<size_t>(j)];
            if (ci == cj) continue;
            double d = (x.row(i) - x.row(j)).norm();
            if (d < min_cross(ci, cj)) {
                min_cross(ci, cj) = d;
                min_cross(cj, ci) = d;
            }
        }
    double sum = 0.0;
    int pairs = 0;
    for (int a = 0; a < p.k; ++a)
        for (int b = a + 1; b < p.k; ++b) {
            sum += min_cross(a, b);
            ++pairs;
        }
    return sum / pairs;
}

MetricReport compute_metrics(const FeatureMatrix& m, const Partition& p) {
    MetricReport r;
    r.silhouette = silhouette(m, p);
    r.davies_bouldin = davies_bouldin(m, p);
    r.calinski_harabasz = calinski_harabasz(m, p);
    r.avg_rmse = avg_rmse(m, p);
    r.avg_variance = avg_variance(m, p);
    r.inter_cluster_distance = inter_cluster_distance(m, p);
    r.k = p.k;
    r.n = m.rows();
    return r;
}

std::string MetricReport::to_json() const {
    // hand-rolled so non-finite values and 17-digit floats stay exact
    std::string s = "{";
    s += "\"silhouette\": " + json_double(silhouette) + ", ";
    s += "\"db\": " + json_double(davies_bouldin) + ", ";
    s += "\"ch\": " + json_double(calinski_harabasz) + ", ";
    s += "\"rmse\": " + json_double(avg_rmse) + ", ";
    s += "\"var\": " + json_double(avg_variance) + ", ";
    s += "\"icd\": " + json_double(inter_cluster_distance) + ", ";
    s += "\"k\": " + std::to_string(k) + ", ";
    s += "\"n\": " + std::to_string(n);
    s += "}";
    return s;
}

}  // namespace gtclust
