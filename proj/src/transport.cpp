#include "gtclust/transport.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace gtclust {

namespace {

struct BasisCell {
    int i, j;
};

}  // namespace

double transport_min_cost(const Vector& supply, const Vector& demand, const Matrix& cost,
                          Matrix* plan_out) {
    const int m = static_cast<int>(supply.size());
    const int n = static_cast<int>(demand.size());
    if (cost.rows() != m || cost.cols() != n) throw Error("transport: cost shape mismatch");
    for (int i = 0; i < m; ++i)
        if (supply(i) < 0) throw Error("transport: negative supply");
    for (int j = 0; j < n; ++j)
        if (demand(j) < 0) throw Error("transport: negative demand");

    const double total_s = supply.sum(), total_d = demand.sum();
    if (std::abs(total_s - total_d) > 1e-9 * std::max({1.0, total_s, total_d}))
        throw Error("transport: supply and demand must balance");

    // absorb float imbalance so the northwest-corner fill closes exactly
    Vector a = supply, b = demand;
    b(n - 1) += total_s - total_d;

    Matrix x = Matrix::Zero(m, n);
    std::vector<std::vector<bool>> basic(static_cast<size_t>(m), std::vector<bool>(static_cast<size_t>(n), false));

    // northwest-corner initial basis (m + n - 1 cells, degenerate allowed)
    {
        int i = 0, j = 0;
        Vector ra = a, rb = b;
        while (i < m && j < n) {
            double q = std::min(ra(i), rb(j));
            x(i, j) = q;
            basic[static_cast<size_t>(i)][static_cast<size_t>(j)] = true;
            ra(i) -= q;
            rb(j) -= q;
            if (i == m - 1 && j == n - 1) break;
            if (ra(i) <= rb(j) && i < m - 1)
                ++i;
            else if (j < n - 1)
                ++j;
            else
                ++i;
        }
    }

    const double eps = 1e-12 * std::max(1.0, cost.cwiseAbs().maxCoeff());
    std::vector<double> u(static_cast<size_t>(m)), v(static_cast<size_t>(n));
    std::vector<bool> u_set(static_cast<size_t>(m)), v_set(static_cast<size_t>(n));

    const int max_pivots = 1000 * (m + n) * (m + n) + 1000;
    for (int pivot = 0; pivot < max_pivots; ++pivot) {
        // duals from the basis tree: u_i + v_j = c_ij on basic cells
        std::fill(u_set.begin(), u_set.end(), false);
        std::fill(v_set.begin(), v_set.end(), false);
        u[0] = 0.0;
        u_set[0] = true;
        bool progress = true;
        while (progress) {
            progress = false;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    if (!basic[static_cast<size_t>(i)][static_cast<size_t>(j)]) continue;
                    if (u_set[static_cast<size_t>(i)] && !v_set[static_cast<size_t>(j)]) {
                        v[static_cast<size_t>(j)] = cost(i, j) - u[static_cast<size_t>(i)];
                        v_set[static_cast<size_t>(j)] = true;
                        progress = true;
                    } else if (!u_set[static_cast<size_t>(i)] && v_set[static_cast<size_t>(j)]) {
                        u[static_cast<size_t>(i)] = cost(i, j) - v[static_cast<size_t>(j)];
                        u_set[static_cast<size_t>(i)] = true;
                        progress = true;
                    }
                }
        }
        // a disconnected (degenerate) basis: anchor unreached duals at 0
        for (int i = 0; i < m; ++i)
            if (!u_set[static_cast<size_t>(i)]) u[static_cast<size_t>(i)] = 0.0;
        for (int j = 0; j < n; ++j)
            if (!v_set[static_cast<size_t>(j)]) v[static_cast<size_t>(j)] = cost.col(j).minCoeff();

        // Bland: first cell in row-major order with negative reduced cost
        int ei = -1, ej = -1;
        for (int i = 0; i < m && ei < 0; ++i)
            for (int j = 0; j < n; ++j) {
                if (basic[static_cast<size_t>(i)][static_cast<size_t>(j)]) continue;
                if (cost(i, j) - u[static_cast<size_t>(i)] - v[static_cast<size_t>(j)] < -eps) {
                    ei = i;
                    ej = j;
                    break;
                }
            }
        if (ei < 0) break;  // optimal

        // unique cycle through the entering cell: DFS alternating row/col
        // moves over basic cells
        std::vector<BasisCell> cycle;
        {
            std::vector<BasisCell> path;
            path.push_back({ei, ej});
            // find path: returns true when we can close back to column ej
            std::function<bool(int, bool)> dfs = [&](int pos, bool move_in_row) -> bool {
                const BasisCell cur = path.back();  // by value: push_back reallocates
                if (move_in_row) {
                    for (int j = 0; j < n; ++j) {
                        if (j == cur.j || !basic[static_cast<size_t>(cur.i)][static_cast<size_t>(j)]) continue;
                        path.push_back({cur.i, j});
                        if (j == ej) return true;
                        if (dfs(pos + 1, false)) return true;
                        path.pop_back();
                    }
                } else {
                    for (int i = 0; i < m; ++i) {
                        if (i == cur.i || !basic[static_cast<size_t>(i)][static_cast<size_t>(cur.j)]) continue;
                        path.push_back({i, cur.j});
                        if (dfs(pos + 1, true)) return true;
                        path.pop_back();
                    }
                }
                return false;
            };
            // close the cycle: leave the entering cell along its row, return
            // on its column
            if (!dfs(0, true)) throw Error("transport: no pivot cycle found (corrupt basis)");
            cycle = path;
        }

        // theta = min x over minus cells (odd positions); ties leave the
        // smallest-index cell, which keeps degenerate pivots from cycling
        double theta = std::numeric_limits<double>::infinity();
        size_t leave = 1;
        for (size_t t = 1; t < cycle.size(); t += 2) {
            double val = x(cycle[t].i, cycle[t].j);
            long long key = static_cast<long long>(cycle[t].i) * n + cycle[t].j;
            long long leave_key = static_cast<long long>(cycle[leave].i) * n + cycle[leave].j;
            if (val < theta || (val == theta && key < leave_key)) {
                theta = val;
                leave = t;
            }
        }
        for (size_t t = 0; t < cycle.size(); ++t) {
            if (t % 2 == 0)
                x(cycle[t].i, cycle[t].j) += theta;
            else
                x(cycle[t].i, cycle[t].j) -= theta;
        }
        basic[static_cast<size_t>(ei)][static_cast<size_t>(ej)] = true;
        basic[static_cast<size_t>(cycle[leave].i)][static_cast<size_t>(cycle[leave].j)] = false;
        x(cycle[leave].i, cycle[leave].j) = 0.0;
    }

    double total = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (x(i, j) != 0.0) total += x(i, j) * cost(i, j);
    if (plan_out) *plan_out = x;
    return total;
}

std::vector<int> hungarian_assignment(const Matrix& cost) {
    if (cost.rows() != cost.cols()) throw Error("hungarian: cost matrix must be square");
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();

    // potentials formulation, 1-based scratch arrays
    std::vector<double> u(static_cast<size_t>(n + 1), 0.0), v(static_cast<size_t>(n + 1), 0.0);
    std::vector<int> match(static_cast<size_t>(n + 1), 0);  // column -> row
    std::vector<int> way(static_cast<size_t>(n + 1), 0);

    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n + 1), inf);
        std::vector<bool> used(static_cast<size_t>(n + 1), false);
        do {
            used[static_cast<size_t>(j0)] = true;
            int i0 = match[static_cast<size_t>(j0)], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (match[static_cast<size_t>(j)] > 0) row_to_col[static_cast<size_t>(match[static_cast<size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

}  // namespace gtclust
