#include "gtclust/validation_metrics.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace gtclust;

namespace {

Partition make_partition(std::vector<int> labels, int k) {
    Partition p;
    p.labels = std::move(labels);
    p.k = k;
    return p;
}

struct RandomInstance {
    FeatureMatrix m;
    Partition p;
};

RandomInstance random_instance(std::uint64_t seed) {
    const int T = 10 + static_cast<int>(seed % 51);  // up to 60
    const int F = 1 + static_cast<int>(seed % 8);
    const int k = 2 + static_cast<int>(seed % 4);    // up to 5
    RandomInstance r;
    r.m = oracles::wrap(oracles::random_matrix(T, F, seed, -4.0, 4.0));
    r.p = oracles::random_partition(T, k, seed + 9000);
    return r;
}

}  // namespace

TEST_CASE("silhouette is 1 for coincident clusters far apart") {
    Matrix x(4, 1);
    x << 0, 0, 10, 10;
    auto p = make_partition({0, 0, 1, 1}, 2);
    CHECK(silhouette(oracles::wrap(x), p) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("silhouette is 0 when all points coincide") {
    Matrix x = Matrix::Zero(4, 2);
    auto p = make_partition({0, 0, 1, 1}, 2);
    CHECK(silhouette(oracles::wrap(x), p) == 0.0);
}

TEST_CASE("silhouette needs k >= 2") {
    Matrix x = Matrix::Zero(3, 1);
    auto p = make_partition({0, 0, 0}, 1);
    CHECK_THROWS_AS(silhouette(oracles::wrap(x), p), Error);
}

TEST_CASE("davies_bouldin is tiny for tight far clusters") {
    Matrix x(6, 1);
    x << 0.0, 0.001, -0.001, 5000.0, 5000.001, 4999.999;
    auto p = make_partition({0, 0, 0, 1, 1, 1}, 2);
    CHECK(davies_bouldin(oracles::wrap(x), p) < 0.01);
}

TEST_CASE("davies_bouldin is infinite for coincident centroids") {
    Matrix x(4, 1);
    x << 0, 1, 0, 1;
    auto p = make_partition({0, 0, 1, 1}, 2);  // both centroids at 0.5
    CHECK(std::isinf(davies_bouldin(oracles::wrap(x), p)));
}

TEST_CASE("calinski_harabasz is infinite for single-point clusters") {
    Matrix x(3, 1);
    x << 0, 5, 9;
    auto p = make_partition({0, 1, 2}, 3);
    CHECK_THROWS_AS(calinski_harabasz(oracles::wrap(x), p), Error);  // needs T > k
    Matrix y(4, 1);
    y << 0, 0, 5, 9;  // zero within-dispersion with duplicate points
    auto q = make_partition({0, 0, 1, 2}, 3);
    CHECK(std::isinf(calinski_harabasz(oracles::wrap(y), q)));
}

TEST_CASE("avg_rmse hand example: two points at distance 2") {
    Matrix x(2, 1);
    x << 0, 2;
    auto p = make_partition({0, 0}, 1);
    CHECK(avg_rmse(oracles::wrap(x), p) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("avg_rmse and avg_variance vanish at the centroids") {
    Matrix x(4, 2);
    x << 1, 1, 1, 1, 3, 3, 3, 3;
    auto p = make_partition({0, 0, 1, 1}, 2);
    CHECK(avg_rmse(oracles::wrap(x), p) == 0.0);
    CHECK(avg_variance(oracles::wrap(x), p) == 0.0);
}

TEST_CASE("per-cluster rmse squared equals cluster variance") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto inst = random_instance(seed);
        // the identity holds per cluster; with one cluster the reports align
        auto one = make_partition(std::vector<int>(static_cast<size_t>(inst.m.rows()), 0), 1);
        double rmse = avg_rmse(inst.m, one);
        double var = avg_variance(inst.m, one);
        CHECK(rmse * rmse == doctest::Approx(var).epsilon(1e-12));
    }
}

TEST_CASE("inter_cluster_distance examples") {
    Matrix x(4, 1);
    x << 0, 1, 6, 9;
    auto p = make_partition({0, 0, 1, 1}, 2);
    CHECK(inter_cluster_distance(oracles::wrap(x), p) == doctest::Approx(5.0));  // closest cross pair 1-6

    Matrix y(3, 1);
    y << 0, 1, 3;  // singleton clusters: pair minima 1, 2, 3
    auto q = make_partition({0, 1, 2}, 3);
    CHECK(inter_cluster_distance(oracles::wrap(y), q) == doctest::Approx(2.0));
}

TEST_CASE("all six metrics match brute-force references on 50 random instances") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto inst = random_instance(seed);
        const Matrix& x = inst.m.data;
        CHECK(silhouette(inst.m, inst.p) ==
              doctest::Approx(oracles::naive_silhouette(x, inst.p)).epsilon(1e-9));
        CHECK(davies_bouldin(inst.m, inst.p) ==
              doctest::Approx(oracles::naive_davies_bouldin(x, inst.p)).epsilon(1e-9));
        CHECK(calinski_harabasz(inst.m, inst.p) ==
              doctest::Approx(oracles::naive_calinski_harabasz(x, inst.p)).epsilon(1e-9));
        CHECK(avg_rmse(inst.m, inst.p) == doctest::Approx(oracles::naive_avg_rmse(x, inst.p)).epsilon(1e-12));
        CHECK(avg_variance(inst.m, inst.p) ==
              doctest::Approx(oracles::naive_avg_variance(x, inst.p)).epsilon(1e-12));
        CHECK(inter_cluster_distance(inst.m, inst.p) ==
              doctest::Approx(oracles::naive_inter_cluster_distance(x, inst.p)).epsilon(1e-9));
        CHECK(silhouette(inst.m, inst.p) >= -1.0);
        CHECK(silhouette(inst.m, inst.p) <= 1.0);
    }
}

TEST_CASE("metrics are invariant to relabeling and row permutation") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto inst = random_instance(seed + 100);
        auto renamed = oracles::relabel(inst.p, seed);
        CHECK(silhouette(inst.m, inst.p) == doctest::Approx(silhouette(inst.m, renamed)).epsilon(1e-12));
        CHECK(davies_bouldin(inst.m, inst.p) ==
              doctest::Approx(davies_bouldin(inst.m, renamed)).epsilon(1e-12));

        // permute rows together with labels
        std::mt19937_64 rng(seed);
        std::vector<int> perm(static_cast<size_t>(inst.m.rows()));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        FeatureMatrix pm;
        pm.data.resize(inst.m.rows(), inst.m.cols());
        Partition pp;
        pp.k = inst.p.k;
        pp.labels.resize(static_cast<size_t>(inst.m.rows()));
        for (int i = 0; i < inst.m.rows(); ++i) {
            pm.data.row(i) = inst.m.data.row(perm[static_cast<size_t>(i)]);
            pp.labels[static_cast<size_t>(i)] = inst.p.labels[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        }
        CHECK(silhouette(inst.m, inst.p) == doctest::Approx(silhouette(pm, pp)).epsilon(1e-12));
        CHECK(avg_rmse(inst.m, inst.p) == doctest::Approx(avg_rmse(pm, pp)).epsilon(1e-12));
        CHECK(inter_cluster_distance(inst.m, inst.p) ==
              doctest::Approx(inter_cluster_distance(pm, pp)).epsilon(1e-12));
    }
}

TEST_CASE("MetricReport serializes with fixed keys and inf as a string") {
    MetricReport r;
    r.silhouette = 0.5;
    r.davies_bouldin = std::numeric_limits<double>::infinity();
    r.calinski_harabasz = 10.0;
    r.avg_rmse = 0.25;
    r.avg_variance = 0.0625;
    r.inter_cluster_distance = 2.0;
    r.k = 3;
    r.n = 100;
    auto js = r.to_json();
    CHECK(js.find("\"silhouette\": 0.5") != std::string::npos);
    CHECK(js.find("\"db\": \"inf\"") != std::string::npos);
    CHECK(js.find("\"ch\": 10") != std::string::npos);
    CHECK(js.find("\"rmse\": 0.25") != std::string::npos);
    CHECK(js.find("\"var\": 0.0625") != std::string::npos);
    CHECK(js.find("\"icd\": 2") != std::string::npos);
    CHECK(js.find("\"k\": 3") != std::string::npos);
    CHECK(js.find("\"n\": 100") != std::string::npos);
}

TEST_CASE("compute_metrics fills the whole report") {
    auto inst = random_instance(7);
    auto rep = compute_metrics(inst.m, inst.p);
    CHECK(rep.k == inst.p.k);
    CHECK(rep.n == inst.m.rows());
    CHECK(rep.silhouette == doctest::Approx(silhouette(inst.m, inst.p)));
    CHECK(rep.avg_variance >= 0.0);
}
