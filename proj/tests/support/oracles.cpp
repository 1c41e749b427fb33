#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

namespace oracles {

namespace {

double comb2(double n) { return n * (n - 1.0) / 2.0; }

std::vector<std::vector<int>> members_of(const Partition& p) {
    std::vector<std::vector<int>> m(static_cast<size_t>(p.k));
    for (int i = 0; i < p.size(); ++i) m[static_cast<size_t>(p.labels[static_cast<size_t>(i)])].push_back(i);
    return m;
}

Eigen::RowVectorXd centroid_of(const Matrix& x, const std::vector<int>& idx) {
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(x.cols());
    for (int i : idx) c += x.row(i);
    return c / static_cast<double>(idx.size());
}

}  // namespace

double ari(const std::vector<int>& a, const std::vector<int>& b) {
    const int n = static_cast<int>(a.size());
    const int ka = *std::max_element(a.begin(), a.end()) + 1;
    const int kb = *std::max_element(b.begin(), b.end()) + 1;
    Matrix cont = Matrix::Zero(ka, kb);
    for (int i = 0; i < n; ++i) cont(a[static_cast<size_t>(i)], b[static_cast<size_t>(i)]) += 1.0;

    double sum_ij = 0.0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) sum_ij += comb2(cont(i, j));
    double sum_a = 0.0, sum_b = 0.0;
    for (int i = 0; i < ka; ++i) sum_a += comb2(cont.row(i).sum());
    for (int j = 0; j < kb; ++j) sum_b += comb2(cont.col(j).sum());
    const double expected = sum_a * sum_b / comb2(static_cast<double>(n));
    const double max_index = (sum_a + sum_b) / 2.0;
    if (max_index == expected) return 1.0;  // both trivial partitions
    return (sum_ij - expected) / (max_index - expected);
}

double naive_silhouette(const Matrix& x, const Partition& p) {
    auto clusters = members_of(p);
    const int n = static_cast<int>(x.rows());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& own = clusters[static_cast<size_t>(p.labels[static_cast<size_t>(i)])];
        if (own.size() == 1) continue;
        double a = 0.0;
        for (int j : own)
            if (j != i) a += (x.row(i) - x.row(j)).norm();
        a /= static_cast<double>(own.size() - 1);

        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < p.k; ++c) {
            if (c == p.labels[static_cast<size_t>(i)]) continue;
            double d = 0.0;
            for (int j : clusters[static_cast<size_t>(c)]) d += (x.row(i) - x.row(j)).norm();
            b = std::min(b, d / static_cast<double>(clusters[static_cast<size_t>(c)].size()));
        }
        if (std::max(a, b) > 0) total += (b - a) / std::max(a, b);
    }
    return total / n;
}

double naive_davies_bouldin(const Matrix& x, const Partition& p) {
    auto clusters = members_of(p);
    std::vector<Eigen::RowVectorXd> mu;
    std::vector<double> s;
    for (const auto& c : clusters) {
        mu.push_back(centroid_of(x, c));
        double acc = 0.0;
        for (int i : c) acc += (x.row(i) - mu.back()).norm();
        s.push_back(acc / static_cast<double>(c.size()));
    }
    double total = 0.0;
    for (int i = 0; i < p.k; ++i) {
        double worst = 0.0;
        for (int j = 0; j < p.k; ++j) {
            if (i == j) continue;
            double d = (mu[static_cast<size_t>(i)] - mu[static_cast<size_t>(j)]).norm();
            worst = std::max(worst, d > 0 ? (s[static_cast<size_t>(i)] + s[static_cast<size_t>(j)]) / d
                                          : std::numeric_limits<double>::infinity());
        }
        total += worst;
    }
    return total / p.k;
}

double naive_calinski_harabasz(const Matrix& x, const Partition& p) {
    auto clusters = members_of(p);
    const int n = static_cast<int>(x.rows());
    Eigen::RowVectorXd grand = Eigen::RowVectorXd::Zero(x.cols());
    for (int i = 0; i < n; ++i) grand += x.row(i);
    grand /= static_cast<double>(n);

    double between = 0.0, within = 0.0;
    for (const auto& c : clusters) {
        auto mu = centroid_of(x, c);
        between += static_cast<double>(c.size()) * (mu - grand).squaredNorm();
        for (int i : c) within += (x.row(i) - mu).squaredNorm();
    }
    if (within == 0) return std::numeric_limits<double>::infinity();
    return (between / (p.k - 1)) / (within / (n - p.k));
}

double naive_avg_rmse(const Matrix& x, const Partition& p) {
    auto clusters = members_of(p);
    double total = 0.0;
    for (const auto& c : clusters) {
        auto mu = centroid_of(x, c);
        double acc = 0.0;
        for (int i : c) acc += (x.row(i) - mu).squaredNorm();
        total += std::sqrt(acc / static_cast<double>(c.size()));
    }
    return total / p.k;
}

double naive_avg_variance(const Matrix& x, const Partition& p) {
    auto clusters = members_of(p);
    double total = 0.0;
    for (const auto& c : clusters) {
        auto mu = centroid_of(x, c);
        double acc = 0.0;
        for (int i : c) acc += (x.row(i) - mu).squaredNorm();
        total += acc / static_cast<double>(c.size());
    }
    return total / p.k;
}

double naive_inter_cluster_distance(const Matrix& x, const Partition& p) {
    auto clusters = members_of(p);
    double total = 0.0;
    int pairs = 0;
    for (int a = 0; a < p.k; ++a)
        for (int b = a + 1; b < p.k; ++b) {
            double best = std::numeric_limits<double>::infinity();
            for (int i : clusters[static_cast<size_t>(a)])
                for (int j : clusters[static_cast<size_t>(b)])
                    best = std::min(best, (x.row(i) - x.row(j)).norm());
            total += best;
            ++pairs;
        }
    return total / pairs;
}

Partition naive_average_linkage(const Matrix& x, int k) {
    const int n = static_cast<int>(x.rows());
    std::vector<std::vector<int>> clusters;
    for (int i = 0; i < n; ++i) clusters.push_back({i});

    Matrix point_dist(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) point_dist(i, j) = (x.row(i) - x.row(j)).norm();

    while (static_cast<int>(clusters.size()) > k) {
        double best = std::numeric_limits<double>::infinity();
        size_t bi = 0, bj = 1;
        for (size_t i = 0; i < clusters.size(); ++i)
            for (size_t j = i + 1; j < clusters.size(); ++j) {
                double acc = 0.0;
                for (int a : clusters[i])
                    for (int b : clusters[j]) acc += point_dist(a, b);
                double d = acc / (static_cast<double>(clusters[i].size()) * clusters[j].size());
                // ids are the min member, kept sorted by construction below
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        auto merged = clusters[bi];
        merged.insert(merged.end(), clusters[bj].begin(), clusters[bj].end());
        std::sort(merged.begin(), merged.end());
        clusters.erase(clusters.begin() + static_cast<long>(bj));
        clusters[bi] = merged;
        // keep clusters ordered by min member so tie-breaks match the
        // lexicographic (i,j) rule
        std::sort(clusters.begin(), clusters.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
    }

    Partition p;
    p.k = k;
    p.labels.assign(static_cast<size_t>(n), -1);
    // label by order of first member, like the library
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    // order clusters by first appearance in index order
    std::vector<std::pair<int, int>> first(static_cast<size_t>(clusters.size()));
    for (size_t c = 0; c < clusters.size(); ++c) first[c] = {clusters[c].front(), static_cast<int>(c)};
    std::sort(first.begin(), first.end());
    for (size_t rank = 0; rank < first.size(); ++rank)
        for (int i : clusters[static_cast<size_t>(first[rank].second)])
            p.labels[static_cast<size_t>(i)] = static_cast<int>(rank);
    return p;
}

Matrix naive_co_association(const std::vector<Partition>& members) {
    const int n = members.front().size();
    const int m = static_cast<int>(members.size());
    Matrix cm(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                cm(i, j) = 1.0;
                continue;
            }
            double count = 0.0;
            for (const auto& p : members)
                if (p.labels[static_cast<size_t>(i)] == p.labels[static_cast<size_t>(j)]) count += 1.0;
            cm(i, j) = count / static_cast<double>(m);
        }
    return cm;
}

double lp_vertex_enumeration(const Vector& supply, const Vector& demand, const Matrix& cost) {
    const int m = static_cast<int>(supply.size());
    const int n = static_cast<int>(demand.size());
    const int cells = m * n;
    const int basis_size = m + n - 1;

    // constraint matrix: one row per supply and demand equation
    Matrix full(m + n, cells);
    full.setZero();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            full(i, i * n + j) = 1.0;
            full(m + j, i * n + j) = 1.0;
        }
    Vector rhs(m + n);
    rhs.head(m) = supply;
    rhs.tail(n) = demand;

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(static_cast<size_t>(basis_size));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == basis_size) {
            Matrix sub(m + n, basis_size);
            for (int c = 0; c < basis_size; ++c) sub.col(c) = full.col(pick[static_cast<size_t>(c)]);
            Vector sol = sub.colPivHouseholderQr().solve(rhs);
            if ((sub * sol - rhs).norm() > 1e-8) return;
            if ((sol.array() < -1e-9).any()) return;
            double c = 0.0;
            for (int t = 0; t < basis_size; ++t)
                c += std::max(0.0, sol(t)) * cost(pick[static_cast<size_t>(t)] / n, pick[static_cast<size_t>(t)] % n);
            best = std::min(best, c);
            return;
        }
        for (int v = start; v < cells; ++v) {
            pick[static_cast<size_t>(depth)] = v;
            rec(v + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

double assignment_brute_force(const Matrix& cost, std::vector<int>* best_out) {
    const int n = static_cast<int>(cost.rows());
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_perm = perm;
    do {
        double c = 0.0;
        for (int i = 0; i < n; ++i) c += cost(i, perm[static_cast<size_t>(i)]);
        if (c < best) {
            best = c;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (best_out) *best_out = best_perm;
    return best;
}

namespace {

double lu_determinant(Matrix a) {
    const int n = static_cast<int>(a.rows());
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (a(piv, col) == 0.0) return 0.0;
        if (piv != col) {
            a.row(piv).swap(a.row(col));
            det = -det;
        }
        det *= a(col, col);
        for (int r = col + 1; r < n; ++r) {
            double f = a(r, col) / a(col, col);
            a.row(r).tail(n - col) -= f * a.row(col).tail(n - col);
        }
    }
    return det;
}

}  // namespace

std::vector<double> charpoly_eigenvalues(const Matrix& a, double tol) {
    const int n = static_cast<int>(a.rows());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < n; ++i) {
        double radius = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) radius += std::abs(a(i, j));
        lo = std::min(lo, a(i, i) - radius);
        hi = std::max(hi, a(i, i) + radius);
    }
    lo -= 1e-6;
    hi += 1e-6;

    auto f = [&](double x) { return lu_determinant(a - x * Matrix::Identity(n, n)); };

    std::vector<double> roots;
    const int grid = 20000;
    double prev_x = lo, prev_f = f(lo);
    for (int g = 1; g <= grid; ++g) {
        double x = lo + (hi - lo) * g / grid;
        double fx = f(x);
        if (prev_f == 0.0) roots.push_back(prev_x);
        if (prev_f * fx < 0) {
            double a0 = prev_x, b0 = x, fa = prev_f;
            while (b0 - a0 > tol) {
                double mid = (a0 + b0) / 2, fm = f(mid);
                if (fa * fm <= 0)
                    b0 = mid;
                else {
                    a0 = mid;
                    fa = fm;
                }
            }
            roots.push_back((a0 + b0) / 2);
        }
        prev_x = x;
        prev_f = fx;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

Matrix random_matrix(int rows, int cols, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

Partition random_partition(int n, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Partition p;
    p.k = k;
    p.labels.resize(static_cast<size_t>(n));
    // guarantee every cluster appears, then fill the rest uniformly
    for (int c = 0; c < k; ++c) p.labels[static_cast<size_t>(c)] = c;
    std::uniform_int_distribution<int> pick(0, k - 1);
    for (int i = k; i < n; ++i) p.labels[static_cast<size_t>(i)] = pick(rng);
    std::shuffle(p.labels.begin(), p.labels.end(), rng);
    return p;
}

Partition relabel(const Partition& p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> perm(static_cast<size_t>(p.k));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Partition out = p;
    for (int& l : out.labels) l = perm[static_cast<size_t>(l)];
    return out;
}

FeatureMatrix wrap(const Matrix& m) {
    FeatureMatrix fm;
    fm.data = m;
    return fm;
}

}  // namespace oracles
