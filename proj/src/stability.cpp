#include "gtclust/stability.hpp"

#include "gtclust/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

namespace gtclust {

namespace {

// centroids and sizes over the labels actually present
struct SideStats {
    std::vector<int> present;  // cluster ids with members, ascending
    Matrix centroids;          // one row per present cluster
    Vector masses;
};

SideStats side_stats(const Matrix& x, const Partition& p) {
    const int T = static_cast<int>(x.rows());
    std::vector<int> sizes(static_cast<size_t>(p.k), 0);
    for (int l : p.labels) sizes[static_cast<size_t>(l)]++;

    SideStats s;
    for (int c = 0; c < p.k; ++c)
        if (sizes[static_cast<size_t>(c)] > 0) s.present.push_back(c);
    const int kp = static_cast<int>(s.present.size());
    s.centroids = Matrix::Zero(kp, x.cols());
    s.masses = Vector::Zero(kp);

    std::vector<int> slot(static_cast<size_t>(p.k), -1);
    for (int a = 0; a < kp; ++a) slot[static_cast<size_t>(s.present[static_cast<size_t>(a)])] = a;
    for (int i = 0; i < T; ++i) {
        int a = slot[static_cast<size_t>(p.labels[static_cast<size_t>(i)])];
        s.centroids.row(a) += x.row(i);
        s.masses(a) += 1.0;
    }
    for (int a = 0; a < kp; ++a) s.centroids.row(a) /= s.masses(a);
    s.masses /= static_cast<double>(T);
    return s;
}

std::string json_double(double v) {
    if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
    if (std::isnan(v)) return "\"nan\"";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Partition restrict_partition(const Partition& p, const std::vector<int>& idx) {
    Partition out;
    out.k = p.k;
    out.source_tag = p.source_tag;
    out.labels.reserve(idx.size());
    for (int i : idx) out.labels.push_back(p.labels[static_cast<size_t>(i)]);
    return out;
}

FeatureMatrix restrict_matrix(const FeatureMatrix& m, const std::vector<int>& idx) {
    FeatureMatrix out;
    out.data.resize(static_cast<Eigen::Index>(idx.size()), m.data.cols());
    for (size_t r = 0; r < idx.size(); ++r) out.data.row(static_cast<Eigen::Index>(r)) = m.data.row(idx[r]);
    out.feature_mins = m.feature_mins;
    out.feature_maxs = m.feature_maxs;
    return out;
}

}  // namespace

double ota(const FeatureMatrix& m, const Partition& p1, const Partition& p2) {
    if (p1.size() != p2.size()) throw Error("ota: partition length mismatch");
    if (p1.size() != m.rows()) throw Error("ota: partition does not match matrix");

    SideStats s1 = side_stats(m.data, p1);
    SideStats s2 = side_stats(m.data, p2);
    if (s1.present.size() != s2.present.size()) throw Error("ota: cluster count mismatch");

    const int k = static_cast<int>(s1.present.size());
    Matrix cost(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) cost(i, j) = (s1.centroids.row(i) - s2.centroids.row(j)).norm();
    return transport_min_cost(s1.masses, s2.masses, cost);
}

double fom(const FeatureMatrix& m, const Partition& p_base, const Partition& p_pert) {
    if (p_base.size() != p_pert.size()) throw Error("fom: partition length mismatch");
    if (p_base.size() != m.rows()) throw Error("fom: partition does not match matrix");
    const int n = p_base.size();

    // pairwise assigned-centroid distance matrices, compared entrywise
    auto centroid_table = [&](const Partition& p) {
        SideStats s = side_stats(m.data, p);
        std::vector<int> slot(static_cast<size_t>(p.k), -1);
        for (size_t a = 0; a < s.present.size(); ++a) slot[static_cast<size_t>(s.present[a])] = static_cast<int>(a);
        const int kp = static_cast<int>(s.present.size());
        Matrix cd(kp, kp);
        for (int a = 0; a < kp; ++a)
            for (int b = 0; b < kp; ++b) cd(a, b) = (s.centroids.row(a) - s.centroids.row(b)).norm();
        return std::make_pair(std::move(cd), std::move(slot));
    };
    auto [cd_b, slot_b] = centroid_table(p_base);
    auto [cd_p, slot_p] = centroid_table(p_pert);

    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const int bi = slot_b[static_cast<size_t>(p_base.labels[static_cast<size_t>(i)])];
        const int pi = slot_p[static_cast<size_t>(p_pert.labels[static_cast<size_t>(i)])];
        for (int j = 0; j < n; ++j) {
            const int bj = slot_b[static_cast<size_t>(p_base.labels[static_cast<size_t>(j)])];
            const int pj = slot_p[static_cast<size_t>(p_pert.labels[static_cast<size_t>(j)])];
            sum += std::abs(cd_b(bi, bj) - cd_p(pi, pj));
        }
    }
    return sum / (static_cast<double>(n) * n);
}

double apn(const Partition& p1, const Partition& p2, bool align) {
    if (p1.size() != p2.size()) throw Error("apn: partition length mismatch");
    const int n = p1.size();

    std::vector<int> mapped(p2.labels);
    if (align) {
        if (p1.k != p2.k) throw Error("apn: alignment requires equal cluster counts");
        Matrix agreement = Matrix::Zero(p2.k, p1.k);
        for (int i = 0; i < n; ++i)
            agreement(p2.labels[static_cast<size_t>(i)], p1.labels[static_cast<size_t>(i)]) += 1.0;
        std::vector<int> to_p1 = hungarian_assignment(-agreement);
        for (int& l : mapped) l = to_p1[static_cast<size_t>(l)];
    }

    int diff = 0;
    for (int i = 0; i < n; ++i)
        if (p1.labels[static_cast<size_t>(i)] != mapped[static_cast<size_t>(i)]) ++diff;
    return static_cast<double>(diff) / n;
}

StabilityReport run_stability(const PipelineFn& pipeline, const FeatureMatrix& m,
                              const PerturbationPlan& plan) {
    if (plan.runs < 2) throw Error("run_stability: plan.runs must be >= 2");
    if (plan.subsample_fraction <= 0 || plan.subsample_fraction > 1)
        throw Error("run_stability: subsample_fraction must be in (0,1]");
    const int T = m.rows();

    Partition base;
    try {
        base = pipeline(m, mix_seed(plan.base_seed, 0));
    } catch (const std::exception& e) {
        throw Error("run 0 (base): " + std::string(e.what()));
    }

    StabilityReport rep;
    for (int r = 1; r < plan.runs; ++r) {
        try {
            StabilityComparison cmp;
            if (plan.mode == PerturbationMode::Reseed) {
                Partition pert = pipeline(m, mix_seed(plan.base_seed, static_cast<std::uint64_t>(r)));
                cmp.ota = ota(m, base, pert);
                cmp.fom = fom(m, base, pert);
                cmp.apn = apn(base, pert);
            } else {
                const int keep = std::max(1, static_cast<int>(std::ceil(plan.subsample_fraction * T)));
                std::vector<int> idx(static_cast<size_t>(T));
                std::iota(idx.begin(), idx.end(), 0);
                std::mt19937_64 rng(mix_seed(plan.base_seed, static_cast<std::uint64_t>(r)));
                for (int i = 0; i < keep; ++i) {
                    std::uniform_int_distribution<int> pick(i, T - 1);
                    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
                }
                idx.resize(static_cast<size_t>(keep));
                std::sort(idx.begin(), idx.end());

                FeatureMatrix sub = restrict_matrix(m, idx);
                Partition pert = pipeline(sub, mix_seed(plan.base_seed, 0));
                Partition base_sub = restrict_partition(base, idx);
                cmp.ota = ota(sub, base_sub, pert);
                cmp.fom = fom(sub, base_sub, pert);
                cmp.apn = apn(base_sub, pert);
            }
            rep.per_run.push_back(cmp);
        } catch (const std::exception& e) {
            throw Error("run " + std::to_string(r) + ": " + e.what());
        }
    }

    for (const auto& c : rep.per_run) {
        rep.ota_mean += c.ota;
        rep.fom_mean += c.fom;
        rep.apn_mean += c.apn;
    }
    const double n = static_cast<double>(rep.per_run.size());
    rep.ota_mean /= n;
    rep.fom_mean /= n;
    rep.apn_mean /= n;
    return rep;
}

std::string StabilityReport::to_json() const {
    std::string s = "{";
    s += "\"ota\": " + json_double(ota_mean) + ", ";
    s += "\"fom\": " + json_double(fom_mean) + ", ";
    s += "\"apn\": " + json_double(apn_mean) + ", ";
    s += "\"per_run\": [";
    for (size_t i = 0; i < per_run.size(); ++i) {
        if (i) s += ", ";
        s += "{\"ota\": " + json_double(per_run[i].ota) + ", \"fom\": " + json_double(per_run[i].fom) +
             ", \"apn\": " + json_double(per_run[i].apn) + "}";
    }
    s += "]}";
    return s;
}

}  // namespace gtclust
