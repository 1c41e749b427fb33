#include "gtclust/base_cluster.hpp"

#include "gtclust/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace gtclust {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::KMeans: return "kmeans";
        case Algorithm::Agglomerative: return "agglomerative";
        case Algorithm::Spectral: return "spectral";
    }
    return "unknown";
}

std::string linkage_name(Linkage l) {
    return l == Linkage::Average ? "average" : "ward";
}

void ClusterModelConfig::validate(int T) const {
    if (k < 2) throw Error("config: k must be >= 2");
    if (k > T) throw Error("config: k must be <= T");
    if (max_iter < 1) throw Error("config: max_iter must be >= 1");
    if (n_init < 1) throw Error("config: n_init must be >= 1");
}

namespace {

int count_distinct_rows(const Matrix& x) {
    const int T = static_cast<int>(x.rows());
    std::vector<int> idx(static_cast<size_t>(T));
    std::iota(idx.begin(), idx.end(), 0);
    auto row_less = [&](int a, int b) {
        for (int j = 0; j < x.cols(); ++j) {
            if (x(a, j) < x(b, j)) return true;
            if (x(a, j) > x(b, j)) return false;
        }
        return false;
    };
    std::sort(idx.begin(), idx.end(), row_less);
    int distinct = T == 0 ? 0 : 1;
    for (int i = 1; i < T; ++i)
        if (row_less(idx[static_cast<size_t>(i - 1)], idx[static_cast<size_t>(i)])) ++distinct;
    return distinct;
}

// One kmeans run: kmeans++ seeding then Lloyd iterations.
KMeansResult kmeans_single(const Matrix& x, int k, std::uint64_t seed, int max_iter, double tol) {
    const int T = static_cast<int>(x.rows());
    const int F = static_cast<int>(x.cols());
    std::mt19937_64 rng(seed);

    Matrix centroids(k, F);
    {
        std::uniform_int_distribution<int> first(0, T - 1);
        centroids.row(0) = x.row(first(rng));
        Vector d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int c = 1; c < k; ++c) {
            double total = d2.sum();
            int pick = 0;
            if (total > 0) {
                double r = unif(rng) * total, acc = 0.0;
                pick = T - 1;
                for (int i = 0; i < T; ++i) {
                    acc += d2(i);
                    if (acc >= r) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = std::uniform_int_distribution<int>(0, T - 1)(rng);
            }
            centroids.row(c) = x.row(pick);
            d2 = d2.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
        }
    }

    std::vector<int> labels(static_cast<size_t>(T), 0);
    std::vector<int> counts(static_cast<size_t>(k), 0);
    double prev_distortion = std::numeric_limits<double>::infinity();
    double distortion = 0.0;

    for (int iter = 0; iter < max_iter; ++iter) {
        distortion = 0.0;
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < T; ++i) {
            int best = 0;
            double best_d = (x.row(i) - centroids.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                double d = (x.row(i) - centroids.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            labels[static_cast<size_t>(i)] = best;
            counts[static_cast<size_t>(best)]++;
            distortion += best_d;
        }

        // repair empty clusters with the farthest point of the largest cluster
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) continue;
            int largest = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
            int far_i = -1;
            double far_d = -1.0;
            for (int i = 0; i < T; ++i) {
                if (labels[static_cast<size_t>(i)] != largest) continue;
                double d = (x.row(i) - centroids.row(largest)).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far_i = i;
                }
            }
            labels[static_cast<size_t>(far_i)] = c;
            counts[static_cast<size_t>(largest)]--;
            counts[static_cast<size_t>(c)]++;
            centroids.row(c) = x.row(far_i);
        }

        if (distortion > prev_distortion * (1.0 + 1e-9) + 1e-12)
            throw Error("kmeans: distortion increased across Lloyd iterations");
        prev_distortion = distortion;

        Matrix next = Matrix::Zero(k, F);
        for (int i = 0; i < T; ++i) next.row(labels[static_cast<size_t>(i)]) += x.row(i);
        for (int c = 0; c < k; ++c)
            if (counts[static_cast<size_t>(c)] > 0) next.row(c) /= counts[static_cast<size_t>(c)];
        double shift = (next - centroids).rowwise().norm().maxCoeff();
        centroids = next;
        if (shift < tol) break;
    }

    // final assignment and distortion against the final centroids
    distortion = 0.0;
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < T; ++i) {
        int best = 0;
        double best_d = (x.row(i) - centroids.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
            double d = (x.row(i) - centroids.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        labels[static_cast<size_t>(i)] = best;
        counts[static_cast<size_t>(best)]++;
        distortion += best_d;
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<size_t>(c)] > 0) continue;
        int largest = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        int far_i = -1;
        double far_d = -1.0;
        for (int i = 0; i < T; ++i) {
            if (labels[static_cast<size_t>(i)] != largest) continue;
            double d = (x.row(i) - centroids.row(largest)).squaredNorm();
            if (d > far_d) {
                far_d = d;
                far_i = i;
            }
        }
        labels[static_cast<size_t>(far_i)] = c;
        counts[static_cast<size_t>(largest)]--;
        counts[static_cast<size_t>(c)]++;
        centroids.row(c) = x.row(far_i);
        distortion = 0.0;
        for (int i = 0; i < T; ++i)
            distortion += (x.row(i) - centroids.row(labels[static_cast<size_t>(i)])).squaredNorm();
    }

    KMeansResult res;
    res.partition.labels = std::move(labels);
    res.partition.k = k;
    res.centroids = std::move(centroids);
    res.distortion = distortion;
    return res;
}

}  // namespace

KMeansResult kmeans(const FeatureMatrix& m, const ClusterModelConfig& cfg) {
    const Matrix& x = m.data;
    const int T = static_cast<int>(x.rows());
    if (cfg.k < 1) throw Error("kmeans: k must be >= 1");
    if (cfg.k > T) throw Error("kmeans: k exceeds distinct points");
    if (cfg.k > 1 && count_distinct_rows(x) < cfg.k) throw Error("kmeans: k exceeds distinct points");

    if (cfg.k == 1) {
        KMeansResult res;
        res.partition.labels.assign(static_cast<size_t>(T), 0);
        res.partition.k = 1;
        res.centroids = x.colwise().mean();
        res.distortion = (x.rowwise() - x.colwise().mean()).rowwise().squaredNorm().sum();
        res.partition.source_tag = "kmeans:seed=" + std::to_string(cfg.seed);
        return res;
    }

    KMeansResult best;
    bool have = false;
    for (int r = 0; r < cfg.n_init; ++r) {
        KMeansResult run = kmeans_single(x, cfg.k, mix_seed(cfg.seed, static_cast<std::uint64_t>(r)),
                                         cfg.max_iter, cfg.tol);
        if (!have || run.distortion < best.distortion) {
            best = std::move(run);
            have = true;
        }
    }
    best.partition.source_tag = "kmeans:seed=" + std::to_string(cfg.seed);
    best.partition.validate();
    return best;
}

Partition agglomerative_precomputed(const Matrix& dist_in, int k, Linkage linkage) {
    const int T = static_cast<int>(dist_in.rows());
    if (k < 1 || k > T) throw Error("agglomerative: k must be in [1, T]");
    const bool ward = linkage == Linkage::Ward;
    Matrix dist = dist_in;

    std::vector<bool> active(static_cast<size_t>(T), true);
    std::vector<int> size(static_cast<size_t>(T), 1);
    std::vector<int> member(static_cast<size_t>(T));  // point -> current cluster id
    std::iota(member.begin(), member.end(), 0);

    for (int n_clusters = T; n_clusters > k; --n_clusters) {
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < T; ++i) {
            if (!active[static_cast<size_t>(i)]) continue;
            for (int j = i + 1; j < T; ++j) {
                if (!active[static_cast<size_t>(j)]) continue;
                if (dist(i, j) < best) {
                    best = dist(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        // merge bj into bi (bi < bj keeps ids stable and breaks ties
        // lexicographically, since the scan meets smaller (i,j) first)
        const double dij = dist(bi, bj);
        const int ni = size[static_cast<size_t>(bi)], nj = size[static_cast<size_t>(bj)];
        for (int t = 0; t < T; ++t) {
            if (!active[static_cast<size_t>(t)] || t == bi || t == bj) continue;
            double d;
            if (ward) {
                const int nt = size[static_cast<size_t>(t)];
                d = ((ni + nt) * dist(bi, t) + (nj + nt) * dist(bj, t) - nt * dij) /
                    static_cast<double>(ni + nj + nt);
            } else {
                d = (ni * dist(bi, t) + nj * dist(bj, t)) / static_cast<double>(ni + nj);
            }
            dist(bi, t) = d;
            dist(t, bi) = d;
        }
        active[static_cast<size_t>(bj)] = false;
        size[static_cast<size_t>(bi)] = ni + nj;
        for (int p = 0; p < T; ++p)
            if (member[static_cast<size_t>(p)] == bj) member[static_cast<size_t>(p)] = bi;
    }

    // relabel surviving clusters 0..k-1 in order of their smallest member
    std::vector<int> relabel(static_cast<size_t>(T), -1);
    int next = 0;
    Partition p;
    p.k = k;
    p.source_tag = "agglomerative:" + linkage_name(linkage);
    p.labels.resize(static_cast<size_t>(T));
    for (int i = 0; i < T; ++i) {
        int c = member[static_cast<size_t>(i)];
        if (relabel[static_cast<size_t>(c)] < 0) relabel[static_cast<size_t>(c)] = next++;
        p.labels[static_cast<size_t>(i)] = relabel[static_cast<size_t>(c)];
    }
    p.validate();
    return p;
}

Partition agglomerative(const FeatureMatrix& m, const ClusterModelConfig& cfg) {
    const Matrix& x = m.data;
    const int T = static_cast<int>(x.rows());
    const bool ward = cfg.linkage == Linkage::Ward;

    // Ward runs Lance-Williams on squared distances, average on plain ones.
    Matrix dist(T, T);
    for (int i = 0; i < T; ++i) {
        dist(i, i) = 0.0;
        for (int j = i + 1; j < T; ++j) {
            double d2 = (x.row(i) - x.row(j)).squaredNorm();
            double d = ward ? d2 : std::sqrt(d2);
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }
    return agglomerative_precomputed(dist, cfg.k, cfg.linkage);
}

Partition spectral(const FeatureMatrix& m, const ClusterModelConfig& cfg) {
    const Matrix& x = m.data;
    const int T = static_cast<int>(x.rows());
    if (T < cfg.k) throw Error("spectral: T must be >= k");

    // sigma = median pairwise distance; all-coincident input degenerates to
    // a uniform affinity instead of dividing by zero
    std::vector<double> dists;
    dists.reserve(static_cast<size_t>(T) * (T - 1) / 2);
    for (int i = 0; i < T; ++i)
        for (int j = i + 1; j < T; ++j) dists.push_back((x.row(i) - x.row(j)).norm());
    double sigma = 1.0;
    if (!dists.empty()) {
        std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
        sigma = dists[dists.size() / 2];
        if (sigma <= 0) sigma = 1.0;
    }

    Matrix a(T, T);
    for (int i = 0; i < T; ++i) {
        a(i, i) = 0.0;
        for (int j = i + 1; j < T; ++j) {
            double w = std::exp(-(x.row(i) - x.row(j)).squaredNorm() / (2.0 * sigma * sigma));
            a(i, j) = w;
            a(j, i) = w;
        }
    }

    Vector deg = a.rowwise().sum();
    Vector dinv_sqrt(T);
    for (int i = 0; i < T; ++i) dinv_sqrt(i) = deg(i) > 0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
    Matrix lap = Matrix::Identity(T, T) - dinv_sqrt.asDiagonal() * a * dinv_sqrt.asDiagonal();

    EigenDecomposition ed = jacobi_eigen(lap);
    Matrix embed = ed.eigenvectors.leftCols(cfg.k);
    for (int i = 0; i < T; ++i) {
        double nrm = embed.row(i).norm();
        if (nrm > 0) embed.row(i) /= nrm;
    }

    FeatureMatrix fm;
    fm.data = embed;
    ClusterModelConfig kcfg = cfg;
    kcfg.algorithm = Algorithm::KMeans;
    Partition p = kmeans(fm, kcfg).partition;
    p.source_tag = "spectral:seed=" + std::to_string(cfg.seed);
    return p;
}

Partition run_base(const FeatureMatrix& m, const ClusterModelConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::KMeans: return kmeans(m, cfg).partition;
        case Algorithm::Agglomerative: return agglomerative(m, cfg);
        case Algorithm::Spectral: return spectral(m, cfg);
    }
    throw Error("run_base: unknown algorithm");
}

int elbow_select_k(const FeatureMatrix& m, int k_min, int k_max, std::uint64_t seed,
                   ElbowDiagnostics* diag) {
    const int T = m.rows();
    if (!(2 <= k_min && k_min < k_max && k_max <= T))
        throw Error("elbow_select_k: need 2 <= k_min < k_max <= T");

    std::vector<double> curve;
    for (int k = k_min; k <= k_max; ++k) {
        ClusterModelConfig cfg;
        cfg.algorithm = Algorithm::KMeans;
        cfg.k = k;
        cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(k));
        cfg.n_init = 5;
        curve.push_back(kmeans(m, cfg).distortion);
    }
    ElbowDiagnostics local;
    ElbowDiagnostics& d = diag ? *diag : local;
    d.distortions = curve;
    for (size_t i = 1; i < curve.size(); ++i)
        if (curve[i] > curve[i - 1] * 1.05)
            d.warnings.push_back("distortion increased >5% between k=" +
                                 std::to_string(k_min + static_cast<int>(i) - 1) + " and k=" +
                                 std::to_string(k_min + static_cast<int>(i)));

    // max |cross product| against the chord; the argmax is invariant to axis
    // scaling so no normalization is needed
    const double ax = k_min, ay = curve.front();
    const double bx = k_max, by = curve.back();
    int best_k = k_min;
    double best_dist = 0.0;
    for (size_t i = 0; i < curve.size(); ++i) {
        double px = k_min + static_cast<double>(i), py = curve[i];
        double cross = std::abs((bx - ax) * (py - ay) - (by - ay) * (px - ax));
        if (cross > best_dist) {
            best_dist = cross;
            best_k = k_min + static_cast<int>(i);
        }
    }
    return best_k;
}

}  // namespace gtclust
