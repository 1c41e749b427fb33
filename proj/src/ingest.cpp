#include "gtclust/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace gtclust {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_cell(const std::string& tok, int line_no) {
    std::string t = tok;
    // tolerate surrounding spaces
    while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.erase(t.begin());
    while (!t.empty() && (t.back() == ' ' || t.back() == '\t' || t.back() == '\r')) t.pop_back();
    if (t == "NA") return kNaN;
    size_t pos = 0;
    double v;
    try {
        v = std::stod(t, &pos);
    } catch (const std::exception&) {
        throw Error("parse error: non-numeric cell '" + tok + "' at line " + std::to_string(line_no));
    }
    if (pos != t.size())
        throw Error("parse error: non-numeric cell '" + tok + "' at line " + std::to_string(line_no));
    return v;
}

bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

SpatioTemporalGrid load_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);

    SpatioTemporalGrid g;
    std::string line;
    int line_no = 1;
    if (!read_line(in, line)) throw Error("parse error: empty file at line 1");
    int n = 0, T = 0, L = 0, W = 0;
    if (std::sscanf(line.c_str(), "#GRID n=%d T=%d L=%d W=%d", &n, &T, &L, &W) != 4)
        throw Error("parse error: malformed header at line 1 (expected '#GRID n=.. T=.. L=.. W=..')");
    if (n < 1 || T < 1 || L < 1 || W < 1)
        throw Error("parse error: all grid dims must be >= 1 at line 1");
    g.n = n;
    g.T = T;
    g.L = L;
    g.W = W;

    ++line_no;
    if (!read_line(in, line)) throw Error("parse error: missing variable-names line at line 2");
    g.variable_names = split_csv(line);
    if (static_cast<int>(g.variable_names.size()) != n)
        throw Error("parse error: expected " + std::to_string(n) + " variable names at line 2, got " +
                    std::to_string(g.variable_names.size()));

    g.values.assign(static_cast<size_t>(n) * T * L * W, kNaN);
    const int cells_per_line = L * W;
    for (int v = 0; v < n; ++v) {
        for (int t = 0; t < T; ++t) {
            ++line_no;
            if (!read_line(in, line))
                throw Error("parse error: row count mismatch, expected " + std::to_string(n * T) +
                            " data lines, file ends at line " + std::to_string(line_no - 1));
            auto cells = split_csv(line);
            if (static_cast<int>(cells.size()) != cells_per_line)
                throw Error("parse error: ragged row at line " + std::to_string(line_no) + ", expected " +
                            std::to_string(cells_per_line) + " cells, got " + std::to_string(cells.size()));
            for (int l = 0; l < L; ++l)
                for (int w = 0; w < W; ++w)
                    g.at(v, t, l, w) = parse_cell(cells[static_cast<size_t>(l * W + w)], line_no);
        }
    }
    while (read_line(in, line)) {
        ++line_no;
        if (!line.empty())
            throw Error("parse error: row count mismatch, unexpected extra data at line " + std::to_string(line_no));
    }
    return g;
}

SpatioTemporalGrid load_csv_2d(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);

    std::string line;
    if (!read_line(in, line)) throw Error("parse error: empty file at line 1");
    auto names = split_csv(line);
    const int F = static_cast<int>(names.size());

    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (read_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (static_cast<int>(cells.size()) != F)
            throw Error("parse error: ragged row at line " + std::to_string(line_no) + ", expected " +
                        std::to_string(F) + " cells, got " + std::to_string(cells.size()));
        std::vector<double> row(static_cast<size_t>(F));
        for (int j = 0; j < F; ++j) row[static_cast<size_t>(j)] = parse_cell(cells[static_cast<size_t>(j)], line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("parse error: no data rows in " + path);

    // A plain table maps onto an (F, T, 1, 1) grid: one "variable" per column.
    SpatioTemporalGrid g;
    g.n = F;
    g.T = static_cast<int>(rows.size());
    g.L = 1;
    g.W = 1;
    g.variable_names = names;
    g.values.assign(static_cast<size_t>(F) * g.T, kNaN);
    for (int t = 0; t < g.T; ++t)
        for (int j = 0; j < F; ++j) g.at(j, t, 0, 0) = rows[static_cast<size_t>(t)][static_cast<size_t>(j)];
    return g;
}

}  // namespace

bool SpatioTemporalGrid::has_missing() const {
    return std::any_of(values.begin(), values.end(), [](double v) { return std::isnan(v); });
}

void SpatioTemporalGrid::validate() const {
    if (n < 1 || T < 1 || L < 1 || W < 1) throw Error("grid: all dims must be >= 1");
    if (values.size() != static_cast<size_t>(n) * T * L * W)
        throw Error("grid: values length does not equal n*T*L*W");
}

SpatioTemporalGrid load_grid(const std::string& path, InputFormat format) {
    SpatioTemporalGrid g = format == InputFormat::GridCsv ? load_grid_csv(path) : load_csv_2d(path);
    g.validate();
    return g;
}

void write_grid(const SpatioTemporalGrid& grid, const std::string& path) {
    grid.validate();
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    out << "#GRID n=" << grid.n << " T=" << grid.T << " L=" << grid.L << " W=" << grid.W << "\n";
    for (int v = 0; v < grid.n; ++v) {
        if (v) out << ",";
        out << grid.variable_names[static_cast<size_t>(v)];
    }
    out << "\n";
    for (int v = 0; v < grid.n; ++v)
        for (int t = 0; t < grid.T; ++t) {
            for (int l = 0; l < grid.L; ++l)
                for (int w = 0; w < grid.W; ++w) {
                    if (l || w) out << ",";
                    double x = grid.at(v, t, l, w);
                    out << (std::isnan(x) ? std::string("NA") : format_double(x));
                }
            out << "\n";
        }
}

SpatioTemporalGrid impute_mean(const SpatioTemporalGrid& grid, MeanScope scope) {
    grid.validate();
    SpatioTemporalGrid out = grid;
    const size_t per_var = static_cast<size_t>(grid.T) * grid.L * grid.W;

    auto mean_of = [](const double* p, size_t count, const std::string& what) {
        double sum = 0.0;
        size_t n_obs = 0;
        for (size_t i = 0; i < count; ++i)
            if (!std::isnan(p[i])) {
                sum += p[i];
                ++n_obs;
            }
        if (n_obs == 0) throw Error(what + " has no observed values");
        return sum / static_cast<double>(n_obs);
    };

    if (scope == MeanScope::PerVariable) {
        for (int v = 0; v < grid.n; ++v) {
            const double* p = grid.values.data() + static_cast<size_t>(v) * per_var;
            double mu = mean_of(p, per_var, "variable " + grid.variable_names[static_cast<size_t>(v)]);
            double* q = out.values.data() + static_cast<size_t>(v) * per_var;
            for (size_t i = 0; i < per_var; ++i)
                if (std::isnan(q[i])) q[i] = mu;
        }
    } else {
        double mu = mean_of(grid.values.data(), grid.values.size(), "dataset");
        for (double& x : out.values)
            if (std::isnan(x)) x = mu;
    }
    return out;
}

FeatureMatrix reshape_to_2d(const SpatioTemporalGrid& grid) {
    grid.validate();
    if (grid.has_missing()) throw Error("reshape_to_2d: grid contains missing values, impute first");
    const int F = grid.n * grid.L * grid.W;
    FeatureMatrix m;
    m.data.resize(grid.T, F);
    for (int t = 0; t < grid.T; ++t)
        for (int v = 0; v < grid.n; ++v)
            for (int l = 0; l < grid.L; ++l)
                for (int w = 0; w < grid.W; ++w) m.data(t, (v * grid.L + l) * grid.W + w) = grid.at(v, t, l, w);
    return m;
}

FeatureMatrix minmax_normalize(const FeatureMatrix& m) {
    const int T = m.rows(), F = m.cols();
    FeatureMatrix out;
    out.data.resize(T, F);
    out.feature_mins.resize(static_cast<size_t>(F));
    out.feature_maxs.resize(static_cast<size_t>(F));
    for (int j = 0; j < F; ++j) {
        double lo = m.data.col(j).minCoeff();
        double hi = m.data.col(j).maxCoeff();
        out.feature_mins[static_cast<size_t>(j)] = lo;
        out.feature_maxs[static_cast<size_t>(j)] = hi;
        if (hi > lo) {
            out.data.col(j) = (m.data.col(j).array() - lo) / (hi - lo);
        } else {
            out.data.col(j).setZero();
        }
    }
    return out;
}

std::pair<FeatureMatrix, Partition> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.T < 1 || spec.F < 1 || spec.k_true < 1) throw Error("synthetic: T, F, k_true must be >= 1");
    if (spec.k_true > spec.T) throw Error("synthetic: k_true must be <= T");
    if (spec.separation <= 0) throw Error("synthetic: separation must be > 0");
    if (spec.noise_sigma < 0) throw Error("synthetic: noise_sigma must be >= 0");

    std::mt19937_64 rng(spec.seed);

    // Rejection-sample centroids in a box sized so acceptance is easy; the
    // box grows if a draw streak fails, so generation always terminates.
    Matrix centroids(spec.k_true, spec.F);
    double box = spec.separation * std::max(2, spec.k_true);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int c = 0; c < spec.k_true; ++c) {
        int tries = 0;
        while (true) {
            Vector cand(spec.F);
            for (int j = 0; j < spec.F; ++j) cand(j) = unif(rng) * box;
            bool ok = true;
            for (int p = 0; p < c; ++p)
                if ((centroids.row(p).transpose() - cand).norm() < spec.separation) {
                    ok = false;
                    break;
                }
            if (ok) {
                centroids.row(c) = cand.transpose();
                break;
            }
            if (++tries >= 10000) {
                box *= 2.0;
                tries = 0;
            }
        }
    }

    Partition truth;
    truth.k = spec.k_true;
    truth.source_tag = "synthetic";
    truth.labels.resize(static_cast<size_t>(spec.T));
    if (spec.regime_layout == RegimeLayout::Interleaved) {
        for (int t = 0; t < spec.T; ++t) truth.labels[static_cast<size_t>(t)] = t % spec.k_true;
    } else {
        // contiguous blocks, earlier blocks one longer when T % k != 0
        int base = spec.T / spec.k_true, extra = spec.T % spec.k_true;
        int t = 0;
        for (int c = 0; c < spec.k_true; ++c) {
            int len = base + (c < extra ? 1 : 0);
            for (int i = 0; i < len; ++i) truth.labels[static_cast<size_t>(t++)] = c;
        }
    }

    FeatureMatrix m;
    m.data.resize(spec.T, spec.F);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0 ? spec.noise_sigma : 1.0);
    for (int t = 0; t < spec.T; ++t) {
        int c = truth.labels[static_cast<size_t>(t)];
        for (int j = 0; j < spec.F; ++j) {
            double x = centroids(c, j);
            if (spec.noise_sigma > 0) x += noise(rng);
            m.data(t, j) = x;
        }
    }
    truth.validate();
    return {std::move(m), std::move(truth)};
}

}  // namespace gtclust
