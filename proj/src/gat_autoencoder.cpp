#include "gtclust/gat_autoencoder.hpp"

#include "gtclust/base_cluster.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace gtclust {

GraphInput build_graph(const Matrix& a, const Matrix& x, double tau_edge) {
    const int T = static_cast<int>(a.rows());
    if (a.cols() != T) throw Error("build_graph: adjacency must be square");
    if (x.rows() != T) throw Error("build_graph: feature rows must match adjacency");
    if (!a.isApprox(a.transpose(), 1e-9)) throw Error("build_graph: adjacency must be symmetric");
    if (a.minCoeff() < 0) throw Error("build_graph: adjacency must be non-negative");

    GraphInput g;
    g.A = a;
    g.X = x;
    g.neighbors.resize(static_cast<size_t>(T));
    for (int i = 0; i < T; ++i) {
        auto& nb = g.neighbors[static_cast<size_t>(i)];
        for (int j = 0; j < T; ++j)
            if (j == i || a(i, j) > tau_edge) nb.push_back(j);
    }
    return g;
}

LayerDims default_dims(int f_node) {
    LayerDims d;
    if (f_node < 64) {
        d.d1 = std::max(2, f_node);
        d.d2 = std::max(2, d.d1 / 2);
        d.d3 = std::max(2, d.d2 / 2);
        d.d_z = std::max(2, d.d3 / 2);
    }
    return d;
}

namespace {

inline double leaky(double v, double slope) { return v >= 0 ? v : slope * v; }
inline double leaky_grad(double v, double slope) { return v >= 0 ? 1.0 : slope; }
inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// ---- GATv2 layer ----------------------------------------------------------

struct GatCache {
    Matrix h_in;          // N x d_in
    Matrix wl_h, wr_h;    // N x d_out
    std::vector<std::vector<double>> alpha;
    Matrix out;           // N x d_out
};

GatCache gat_forward(const Matrix& h, const GraphInput& graph, const GatLayerParams& p) {
    const int N = static_cast<int>(h.rows());
    const int d_out = static_cast<int>(p.W_l.rows());
    GatCache c;
    c.h_in = h;
    c.wl_h.noalias() = h * p.W_l.transpose();
    c.wr_h.noalias() = h * p.W_r.transpose();
    c.alpha.resize(static_cast<size_t>(N));
    c.out = Matrix::Zero(N, d_out);

    Vector u(d_out);
    for (int i = 0; i < N; ++i) {
        const auto& nb = graph.neighbors[static_cast<size_t>(i)];
        std::vector<double>& al = c.alpha[static_cast<size_t>(i)];
        al.resize(nb.size());
        double emax = -std::numeric_limits<double>::infinity();
        for (size_t t = 0; t < nb.size(); ++t) {
            u = c.wl_h.row(i).transpose() + c.wr_h.row(nb[t]).transpose();
            double e = 0.0;
            for (int d = 0; d < d_out; ++d) e += p.a(d) * leaky(u(d), p.leaky_slope);
            al[t] = e;
            emax = std::max(emax, e);
        }
        double denom = 0.0;
        for (double& e : al) {
            e = std::exp(e - emax);
            denom += e;
        }
        for (size_t t = 0; t < nb.size(); ++t) {
            al[t] /= denom;
            c.out.row(i) += al[t] * c.wr_h.row(nb[t]);
        }
    }
    return c;
}

// accumulates into gp; writes the input gradient into dh
void gat_backward(const GatCache& c, const GraphInput& graph, const GatLayerParams& p,
                  const Matrix& d_out_grad, GatLayerParams& gp, Matrix& dh) {
    const int N = static_cast<int>(c.h_in.rows());
    const int d_out = static_cast<int>(p.W_l.rows());

    Matrix dwl_h = Matrix::Zero(N, d_out);
    Matrix dwr_h = Matrix::Zero(N, d_out);
    Vector u(d_out), du(d_out);
    std::vector<double> dalpha;

    for (int i = 0; i < N; ++i) {
        const auto& nb = graph.neighbors[static_cast<size_t>(i)];
        const auto& al = c.alpha[static_cast<size_t>(i)];
        dalpha.resize(nb.size());
        double weighted = 0.0;
        for (size_t t = 0; t < nb.size(); ++t) {
            dalpha[t] = d_out_grad.row(i).dot(c.wr_h.row(nb[t]));
            weighted += al[t] * dalpha[t];
        }
        for (size_t t = 0; t < nb.size(); ++t) {
            const int j = nb[t];
            dwr_h.row(j) += al[t] * d_out_grad.row(i);  // aggregation term
            const double de = al[t] * (dalpha[t] - weighted);
            u = c.wl_h.row(i).transpose() + c.wr_h.row(j).transpose();
            for (int d = 0; d < d_out; ++d) {
                gp.a(d) += de * leaky(u(d), p.leaky_slope);
                du(d) = de * p.a(d) * leaky_grad(u(d), p.leaky_slope);
            }
            dwl_h.row(i) += du.transpose();
            dwr_h.row(j) += du.transpose();
        }
    }
    gp.W_l.noalias() += dwl_h.transpose() * c.h_in;
    gp.W_r.noalias() += dwr_h.transpose() * c.h_in;
    dh.noalias() = dwl_h * p.W_l + dwr_h * p.W_r;
}

// ---- LSTM layer ------------------------------------------------------------

struct LstmCache {
    Matrix x;                    // N x D
    Matrix gi, gf, gg, go;       // N x H, activated gates
    Matrix c_state, tanh_c, h;   // N x H
};

LstmCache lstm_forward(const Matrix& x, const LstmParams& p) {
    const int N = static_cast<int>(x.rows());
    const int H = static_cast<int>(p.W_h.cols());
    LstmCache c;
    c.x = x;
    c.gi.resize(N, H);
    c.gf.resize(N, H);
    c.gg.resize(N, H);
    c.go.resize(N, H);
    c.c_state.resize(N, H);
    c.tanh_c.resize(N, H);
    c.h.resize(N, H);

    Vector h_prev = Vector::Zero(H), c_prev = Vector::Zero(H);
    Vector pre(4 * H);
    for (int t = 0; t < N; ++t) {
        pre.noalias() = p.W_x * x.row(t).transpose() + p.W_h * h_prev + p.b;
        for (int d = 0; d < H; ++d) {
            const double i_g = sigmoid(pre(d));
            const double f_g = sigmoid(pre(H + d));
            const double g_g = std::tanh(pre(2 * H + d));
            const double o_g = sigmoid(pre(3 * H + d));
            const double cs = f_g * c_prev(d) + i_g * g_g;
            const double tc = std::tanh(cs);
            c.gi(t, d) = i_g;
            c.gf(t, d) = f_g;
            c.gg(t, d) = g_g;
            c.go(t, d) = o_g;
            c.c_state(t, d) = cs;
            c.tanh_c(t, d) = tc;
            c.h(t, d) = o_g * tc;
        }
        h_prev = c.h.row(t).transpose();
        c_prev = c.c_state.row(t).transpose();
    }
    return c;
}

// accumulates into gp; writes input-sequence gradient into dx
void lstm_backward(const LstmCache& c, const LstmParams& p, const Matrix& dh_seq, LstmParams& gp,
                   Matrix& dx) {
    const int N = static_cast<int>(c.x.rows());
    const int H = static_cast<int>(p.W_h.cols());
    dx = Matrix::Zero(N, c.x.cols());

    Vector dh_next = Vector::Zero(H), dc_next = Vector::Zero(H);
    Vector dgates(4 * H);
    for (int t = N - 1; t >= 0; --t) {
        for (int d = 0; d < H; ++d) {
            const double dh = dh_seq(t, d) + dh_next(d);
            const double o_g = c.go(t, d), tc = c.tanh_c(t, d);
            const double dct = dh * o_g * (1.0 - tc * tc) + dc_next(d);
            const double c_prev = t > 0 ? c.c_state(t - 1, d) : 0.0;
            const double i_g = c.gi(t, d), f_g = c.gf(t, d), g_g = c.gg(t, d);

            dgates(d) = dct * g_g * i_g * (1.0 - i_g);
            dgates(H + d) = dct * c_prev * f_g * (1.0 - f_g);
            dgates(2 * H + d) = dct * i_g * (1.0 - g_g * g_g);
            dgates(3 * H + d) = dh * tc * o_g * (1.0 - o_g);
            dc_next(d) = dct * f_g;
        }
        gp.W_x.noalias() += dgates * c.x.row(t);
        if (t > 0) gp.W_h.noalias() += dgates * c.h.row(t - 1);
        gp.b += dgates;
        dx.row(t).noalias() = (p.W_x.transpose() * dgates).transpose();
        dh_next.noalias() = p.W_h.transpose() * dgates;
    }
}

// ---- pooling gate ----------------------------------------------------------

struct GateCache {
    Matrix h_in;          // N x d
    Vector scores;        // N
    Matrix gated;         // N x d, tanh(s_i) * h_i
    std::vector<int> kept;
    double p_norm = 1.0;
};

GateCache gate_forward(const Matrix& h, const Vector& p, double ratio) {
    const int N = static_cast<int>(h.rows());
    GateCache c;
    c.h_in = h;
    c.p_norm = std::max(p.norm(), 1e-12);
    c.scores = h * (p / c.p_norm);
    c.gated.resize(N, h.cols());
    for (int i = 0; i < N; ++i) c.gated.row(i) = std::tanh(c.scores(i)) * h.row(i);

    const int keep = std::min<int>(N, static_cast<int>(std::ceil(ratio * N)));
    std::vector<int> order(static_cast<size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return c.scores(a) > c.scores(b); });
    c.kept.assign(order.begin(), order.begin() + keep);
    std::sort(c.kept.begin(), c.kept.end());  // original temporal order
    return c;
}

// d_gated holds the gradient wrt every gated row (pooled-path rows already
// scattered back); accumulates into dp, writes dh
void gate_backward(const GateCache& c, const Vector& p, const Matrix& d_gated, Vector& dp, Matrix& dh) {
    const int N = static_cast<int>(c.h_in.rows());
    dh = Matrix::Zero(N, c.h_in.cols());
    const Vector p_hat = p / c.p_norm;
    for (int i = 0; i < N; ++i) {
        const double g = std::tanh(c.scores(i));
        const double ds = d_gated.row(i).dot(c.h_in.row(i)) * (1.0 - g * g);
        dh.row(i) = g * d_gated.row(i) + ds * p_hat.transpose();
        dp += ds * (c.h_in.row(i).transpose() / c.p_norm - c.scores(i) * p / (c.p_norm * c.p_norm));
    }
}

// ---- full pass -------------------------------------------------------------

struct FullForward {
    GatCache eg0, eg1, eg2;
    GateCache gate;
    Matrix pooled_in;  // kept x d3
    LstmCache elp0, elp1;  // pooled path
    LstmCache elf0, elf1;  // full path
    Matrix z_pooled, z_full;
    Matrix unpooled;  // T x d_z
    LstmCache dl0, dl1;
    GatCache dg0, dg1, dg2;
    Matrix x_hat;
    Matrix a_hat;
};

FullForward full_forward(const GraphInput& graph, const AutoencoderParams& p, const TrainConfig& cfg) {
    FullForward f;
    f.eg0 = gat_forward(graph.X, graph, p.enc_gat[0]);
    f.eg1 = gat_forward(f.eg0.out, graph, p.enc_gat[1]);
    f.eg2 = gat_forward(f.eg1.out, graph, p.enc_gat[2]);

    f.gate = gate_forward(f.eg2.out, p.pool_p, cfg.pool_ratio);
    const int keep = static_cast<int>(f.gate.kept.size());
    f.pooled_in.resize(keep, f.eg2.out.cols());
    for (int r = 0; r < keep; ++r) f.pooled_in.row(r) = f.gate.gated.row(f.gate.kept[static_cast<size_t>(r)]);

    f.elp0 = lstm_forward(f.pooled_in, p.enc_lstm[0]);
    f.elp1 = lstm_forward(f.elp0.h, p.enc_lstm[1]);
    f.z_pooled = f.elp1.h;

    f.elf0 = lstm_forward(f.gate.gated, p.enc_lstm[0]);
    f.elf1 = lstm_forward(f.elf0.h, p.enc_lstm[1]);
    f.z_full = f.elf1.h;

    const int T = graph.nodes();
    f.unpooled = Matrix::Zero(T, f.z_pooled.cols());
    for (int r = 0; r < keep; ++r) f.unpooled.row(f.gate.kept[static_cast<size_t>(r)]) = f.z_pooled.row(r);

    f.dl0 = lstm_forward(f.unpooled, p.dec_lstm[0]);
    f.dl1 = lstm_forward(f.dl0.h, p.dec_lstm[1]);
    f.dg0 = gat_forward(f.dl1.h, graph, p.dec_gat[0]);
    f.dg1 = gat_forward(f.dg0.out, graph, p.dec_gat[1]);
    f.dg2 = gat_forward(f.dg1.out, graph, p.dec_gat[2]);
    f.x_hat = f.dg2.out;

    const Matrix& h_dec = f.dg1.out;
    Matrix prod = h_dec * h_dec.transpose();
    f.a_hat = prod.unaryExpr([](double v) { return sigmoid(v); });
    return f;
}

double clustering_term(const Matrix& z, const Matrix& centroids) {
    double s = 0.0;
    for (int i = 0; i < z.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < centroids.rows(); ++j)
            best = std::min(best, (z.row(i) - centroids.row(j)).squaredNorm());
        s += best;
    }
    return s / static_cast<double>(z.rows());
}

double loss_from_forward(const FullForward& f, const GraphInput& graph, const Matrix& centroids,
                         double lambda) {
    const double rec_x = (graph.X - f.x_hat).squaredNorm() / static_cast<double>(graph.X.size());
    const double rec_a = (graph.A - f.a_hat).squaredNorm() / static_cast<double>(graph.A.size());
    double l = rec_x + rec_a;
    if (lambda != 0.0) l += lambda * clustering_term(f.z_full, centroids);
    return l;
}

void backward(const FullForward& f, const GraphInput& graph, const AutoencoderParams& p,
              const TrainConfig& cfg, const Matrix& centroids, AutoencoderParams& g) {
    const int T = graph.nodes();
    const int keep = static_cast<int>(f.gate.kept.size());

    // reconstruction heads
    Matrix d_xhat = 2.0 * (f.x_hat - graph.X) / static_cast<double>(graph.X.size());
    Matrix d_ahat = 2.0 * (f.a_hat - graph.A) / static_cast<double>(graph.A.size());
    Matrix d_prod = d_ahat.cwiseProduct(f.a_hat.cwiseProduct(Matrix::Ones(T, T) - f.a_hat));
    Matrix d_hdec = (d_prod + d_prod.transpose()) * f.dg1.out;

    Matrix d_g2_in, d_g1_in, d_g0_in;
    gat_backward(f.dg2, graph, p.dec_gat[2], d_xhat, g.dec_gat[2], d_g2_in);
    d_g2_in += d_hdec;
    gat_backward(f.dg1, graph, p.dec_gat[1], d_g2_in, g.dec_gat[1], d_g1_in);
    gat_backward(f.dg0, graph, p.dec_gat[0], d_g1_in, g.dec_gat[0], d_g0_in);

    Matrix d_dl1_in, d_dl0_in;
    lstm_backward(f.dl1, p.dec_lstm[1], d_g0_in, g.dec_lstm[1], d_dl1_in);
    lstm_backward(f.dl0, p.dec_lstm[0], d_dl1_in, g.dec_lstm[0], d_dl0_in);

    // unpool: gather gradients at kept rows
    Matrix d_z_pooled(keep, f.z_pooled.cols());
    for (int r = 0; r < keep; ++r) d_z_pooled.row(r) = d_dl0_in.row(f.gate.kept[static_cast<size_t>(r)]);

    // clustering term on the full path
    Matrix d_z_full = Matrix::Zero(T, f.z_full.cols());
    if (cfg.lambda != 0.0) {
        const double scale = cfg.lambda * 2.0 / static_cast<double>(T);
        for (int i = 0; i < T; ++i) {
            int best_j = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < centroids.rows(); ++j) {
                double d = (f.z_full.row(i) - centroids.row(j)).squaredNorm();
                if (d < best) {
                    best = d;
                    best_j = j;
                }
            }
            d_z_full.row(i) = scale * (f.z_full.row(i) - centroids.row(best_j));
        }
    }

    Matrix d_elp1_in, d_elp0_in, d_elf1_in, d_elf0_in;
    lstm_backward(f.elp1, p.enc_lstm[1], d_z_pooled, g.enc_lstm[1], d_elp1_in);
    lstm_backward(f.elp0, p.enc_lstm[0], d_elp1_in, g.enc_lstm[0], d_elp0_in);
    lstm_backward(f.elf1, p.enc_lstm[1], d_z_full, g.enc_lstm[1], d_elf1_in);
    lstm_backward(f.elf0, p.enc_lstm[0], d_elf1_in, g.enc_lstm[0], d_elf0_in);

    // merge both paths onto the gated rows
    Matrix d_gated = d_elf0_in;
    for (int r = 0; r < keep; ++r) d_gated.row(f.gate.kept[static_cast<size_t>(r)]) += d_elp0_in.row(r);

    Matrix d_h3;
    gate_backward(f.gate, p.pool_p, d_gated, g.pool_p, d_h3);

    Matrix d_h2, d_h1, d_h0;
    gat_backward(f.eg2, graph, p.enc_gat[2], d_h3, g.enc_gat[2], d_h2);
    gat_backward(f.eg1, graph, p.enc_gat[1], d_h2, g.enc_gat[1], d_h1);
    gat_backward(f.eg0, graph, p.enc_gat[0], d_h1, g.enc_gat[0], d_h0);
}

Matrix refresh_centroids(const Matrix& z, int k, std::uint64_t seed, const Matrix* previous) {
    FeatureMatrix fm;
    fm.data = z;
    ClusterModelConfig cfg;
    cfg.algorithm = Algorithm::KMeans;
    cfg.k = k;
    cfg.seed = seed;
    try {
        return kmeans(fm, cfg).centroids;
    } catch (const Error&) {
        // degenerate latent (too few distinct rows); keep going
        if (previous && previous->rows() == k) return *previous;
        Matrix c(k, z.cols());
        for (int j = 0; j < k; ++j) c.row(j) = z.row(j % z.rows());
        return c;
    }
}

}  // namespace

AutoencoderParams AutoencoderParams::zeros_like() const {
    AutoencoderParams g = *this;
    for (auto& l : g.enc_gat) {
        l.W_l.setZero();
        l.W_r.setZero();
        l.a.setZero();
    }
    g.pool_p.setZero();
    for (auto& l : g.enc_lstm) {
        l.W_x.setZero();
        l.W_h.setZero();
        l.b.setZero();
    }
    for (auto& l : g.dec_lstm) {
        l.W_x.setZero();
        l.W_h.setZero();
        l.b.setZero();
    }
    for (auto& l : g.dec_gat) {
        l.W_l.setZero();
        l.W_r.setZero();
        l.a.setZero();
    }
    return g;
}

std::vector<ParamBlock> param_blocks(AutoencoderParams& p) {
    std::vector<ParamBlock> out;
    auto add = [&](const std::string& name, double* data, Eigen::Index size) {
        out.push_back({name, data, static_cast<int>(size)});
    };
    for (int i = 0; i < 3; ++i) {
        auto& l = p.enc_gat[static_cast<size_t>(i)];
        add("enc_gat" + std::to_string(i) + ".W_l", l.W_l.data(), l.W_l.size());
        add("enc_gat" + std::to_string(i) + ".W_r", l.W_r.data(), l.W_r.size());
        add("enc_gat" + std::to_string(i) + ".a", l.a.data(), l.a.size());
    }
    add("pool_p", p.pool_p.data(), p.pool_p.size());
    for (int i = 0; i < 2; ++i) {
        auto& l = p.enc_lstm[static_cast<size_t>(i)];
        add("enc_lstm" + std::to_string(i) + ".W_x", l.W_x.data(), l.W_x.size());
        add("enc_lstm" + std::to_string(i) + ".W_h", l.W_h.data(), l.W_h.size());
        add("enc_lstm" + std::to_string(i) + ".b", l.b.data(), l.b.size());
    }
    for (int i = 0; i < 2; ++i) {
        auto& l = p.dec_lstm[static_cast<size_t>(i)];
        add("dec_lstm" + std::to_string(i) + ".W_x", l.W_x.data(), l.W_x.size());
        add("dec_lstm" + std::to_string(i) + ".W_h", l.W_h.data(), l.W_h.size());
        add("dec_lstm" + std::to_string(i) + ".b", l.b.data(), l.b.size());
    }
    for (int i = 0; i < 3; ++i) {
        auto& l = p.dec_gat[static_cast<size_t>(i)];
        add("dec_gat" + std::to_string(i) + ".W_l", l.W_l.data(), l.W_l.size());
        add("dec_gat" + std::to_string(i) + ".W_r", l.W_r.data(), l.W_r.size());
        add("dec_gat" + std::to_string(i) + ".a", l.a.data(), l.a.size());
    }
    return out;
}

AutoencoderParams init_params(int f_node, const LayerDims& dims, std::uint64_t seed) {
    AutoencoderParams p;
    p.dims = dims;
    p.f_node = f_node;
    std::mt19937_64 rng(seed);

    auto fill = [&rng](auto& block, int fan_in, int fan_out) {
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-s, s);
        for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = u(rng);
    };
    auto make_gat = [&](GatLayerParams& l, int d_in, int d_out) {
        l.W_l.resize(d_out, d_in);
        l.W_r.resize(d_out, d_in);
        l.a.resize(d_out);
        fill(l.W_l, d_in, d_out);
        fill(l.W_r, d_in, d_out);
        fill(l.a, d_out, 1);
    };
    auto make_lstm = [&](LstmParams& l, int d_in, int h) {
        l.W_x.resize(4 * h, d_in);
        l.W_h.resize(4 * h, h);
        l.b.resize(4 * h);
        fill(l.W_x, d_in, h);
        fill(l.W_h, h, h);
        fill(l.b, h, 1);
    };

    make_gat(p.enc_gat[0], f_node, dims.d1);
    make_gat(p.enc_gat[1], dims.d1, dims.d2);
    make_gat(p.enc_gat[2], dims.d2, dims.d3);
    p.pool_p.resize(dims.d3);
    fill(p.pool_p, dims.d3, 1);
    make_lstm(p.enc_lstm[0], dims.d3, dims.d_z);
    make_lstm(p.enc_lstm[1], dims.d_z, dims.d_z);
    make_lstm(p.dec_lstm[0], dims.d_z, dims.d_z);
    make_lstm(p.dec_lstm[1], dims.d_z, dims.d3);
    make_gat(p.dec_gat[0], dims.d3, dims.d2);
    make_gat(p.dec_gat[1], dims.d2, dims.d1);
    make_gat(p.dec_gat[2], dims.d1, f_node);
    return p;
}

Matrix gatv2_layer(const Matrix& h, const GraphInput& graph, const GatLayerParams& params) {
    return gat_forward(h, graph, params).out;
}

Matrix gatv2_attention(const Matrix& h, const GraphInput& graph, const GatLayerParams& params) {
    GatCache c = gat_forward(h, graph, params);
    const int n = static_cast<int>(h.rows());
    Matrix att = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& nb = graph.neighbors[static_cast<size_t>(i)];
        for (size_t t = 0; t < nb.size(); ++t) att(i, nb[t]) = c.alpha[static_cast<size_t>(i)][t];
    }
    return att;
}

std::pair<Matrix, std::vector<int>> topk_pool(const Matrix& h, const Vector& p, double ratio) {
    if (ratio <= 0 || ratio > 1) throw Error("topk_pool: ratio must be in (0,1]");
    GateCache c = gate_forward(h, p, ratio);
    Matrix out(static_cast<Eigen::Index>(c.kept.size()), h.cols());
    for (size_t r = 0; r < c.kept.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = c.gated.row(c.kept[r]);
    return {std::move(out), std::move(c.kept)};
}

Matrix recurrent_layer(const Matrix& sequence, const LstmParams& params) {
    return lstm_forward(sequence, params).h;
}

EncodeResult encode(const GraphInput& graph, const AutoencoderParams& params, const TrainConfig& cfg) {
    FullForward f = full_forward(graph, params, cfg);
    EncodeResult r;
    r.z_full = std::move(f.z_full);
    r.z_pooled = std::move(f.z_pooled);
    r.kept_indices = std::move(f.gate.kept);
    return r;
}

DecodeResult decode(const Matrix& z_pooled, const std::vector<int>& kept_indices,
                    const AutoencoderParams& params, const GraphInput& graph) {
    const int T = graph.nodes();
    Matrix unpooled = Matrix::Zero(T, z_pooled.cols());
    for (size_t r = 0; r < kept_indices.size(); ++r)
        unpooled.row(kept_indices[r]) = z_pooled.row(static_cast<Eigen::Index>(r));

    LstmCache dl0 = lstm_forward(unpooled, params.dec_lstm[0]);
    LstmCache dl1 = lstm_forward(dl0.h, params.dec_lstm[1]);
    GatCache dg0 = gat_forward(dl1.h, graph, params.dec_gat[0]);
    GatCache dg1 = gat_forward(dg0.out, graph, params.dec_gat[1]);
    GatCache dg2 = gat_forward(dg1.out, graph, params.dec_gat[2]);

    DecodeResult r;
    r.x_hat = dg2.out;
    Matrix prod = dg1.out * dg1.out.transpose();
    r.a_hat = prod.unaryExpr([](double v) { return sigmoid(v); });
    return r;
}

double loss(const Matrix& x, const Matrix& a, const Matrix& x_hat, const Matrix& a_hat,
            const Matrix& z_full, const Matrix& centroids, double lambda) {
    const double rec_x = (x - x_hat).squaredNorm() / static_cast<double>(x.size());
    const double rec_a = (a - a_hat).squaredNorm() / static_cast<double>(a.size());
    double l = rec_x + rec_a;
    if (lambda != 0.0) l += lambda * clustering_term(z_full, centroids);
    return l;
}

ForwardBackward loss_and_gradients(const GraphInput& graph, const AutoencoderParams& params,
                                   const TrainConfig& cfg, const Matrix& centroids,
                                   AutoencoderParams& grads) {
    FullForward f = full_forward(graph, params, cfg);
    backward(f, graph, params, cfg, centroids, grads);
    ForwardBackward r;
    r.loss_value = loss_from_forward(f, graph, centroids, cfg.lambda);
    r.z_full = std::move(f.z_full);
    r.x_hat = std::move(f.x_hat);
    r.a_hat = std::move(f.a_hat);
    return r;
}

TrainResult train(const GraphInput& graph, const TrainConfig& cfg) {
    if (cfg.pool_ratio * graph.nodes() < 1.0) throw Error("train: pool_ratio * T must be >= 1");
    if (cfg.epochs < 1) throw Error("train: epochs must be >= 1");

    AutoencoderParams params = init_params(static_cast<int>(graph.X.cols()),
                                           default_dims(static_cast<int>(graph.X.cols())), cfg.seed);
    Matrix centroids;

    TrainResult res;
    FullForward fwd = full_forward(graph, params, cfg);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.lambda != 0.0 && epoch % std::max(1, cfg.centroid_refresh) == 0)
            centroids = refresh_centroids(fwd.z_full, cfg.k, mix_seed(cfg.seed, 7000 + static_cast<std::uint64_t>(epoch)),
                                          centroids.size() ? &centroids : nullptr);
        if (centroids.rows() == 0) centroids = Matrix::Zero(cfg.k, fwd.z_full.cols());

        const double cur = loss_from_forward(fwd, graph, centroids, cfg.lambda);
        if (!std::isfinite(cur)) throw Error("train: non-finite loss at epoch " + std::to_string(epoch));
        res.loss_history.push_back(cur);

        AutoencoderParams grads = params.zeros_like();
        backward(fwd, graph, params, cfg, centroids, grads);

        auto pb = param_blocks(params);
        auto gb = param_blocks(grads);
        double step = cfg.step_size;
        for (int attempt = 0; attempt < 30; ++attempt) {
            AutoencoderParams cand = params;
            auto cb = param_blocks(cand);
            for (size_t b = 0; b < cb.size(); ++b)
                for (int i = 0; i < cb[b].size; ++i) cb[b].data[i] = pb[b].data[i] - step * gb[b].data[i];
            FullForward fwd_c = full_forward(graph, cand, cfg);
            const double next = loss_from_forward(fwd_c, graph, centroids, cfg.lambda);
            if (std::isfinite(next) && next <= cur) {
                params = std::move(cand);
                fwd = std::move(fwd_c);
                break;
            }
            step /= 2.0;  // halved for this epoch only
        }
    }
    res.loss_history.push_back(loss_from_forward(fwd, graph, centroids.rows() ? centroids
                                                                              : Matrix::Zero(cfg.k, fwd.z_full.cols()),
                                                 cfg.lambda));
    res.z_full = std::move(fwd.z_full);
    res.params = std::move(params);
    return res;
}

Partition cluster_latent(const Matrix& z_full, int k, std::uint64_t seed) {
    FeatureMatrix fm;
    fm.data = z_full;
    ClusterModelConfig cfg;
    cfg.algorithm = Algorithm::KMeans;
    cfg.k = k;
    cfg.seed = seed;
    cfg.n_init = 5;
    Partition p = kmeans(fm, cfg).partition;
    p.source_tag = "latent_kmeans:seed=" + std::to_string(seed);
    return p;
}

void save_checkpoint(const AutoencoderParams& params, std::uint64_t seed, int epoch,
                     const std::string& prefix) {
    AutoencoderParams copy = params;
    auto blocks = param_blocks(copy);

    nlohmann::json manifest;
    manifest["dims"] = {copy.dims.d1, copy.dims.d2, copy.dims.d3, copy.dims.d_z};
    manifest["f_node"] = copy.f_node;
    manifest["seed"] = seed;
    manifest["epoch"] = epoch;
    nlohmann::json layout = nlohmann::json::array();
    for (const auto& b : blocks) layout.push_back({{"name", b.name}, {"size", b.size}});
    manifest["blocks"] = layout;

    std::ofstream mj(prefix + ".json");
    if (!mj) throw Error("cannot write checkpoint manifest: " + prefix + ".json");
    mj << manifest.dump(2) << "\n";

    std::ofstream pv(prefix + "_params.csv");
    if (!pv) throw Error("cannot write checkpoint params: " + prefix + "_params.csv");
    char buf[64];
    for (const auto& b : blocks)
        for (int i = 0; i < b.size; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", b.data[i]);
            pv << buf << "\n";
        }
}

Checkpoint load_checkpoint(const std::string& prefix) {
    std::ifstream mj(prefix + ".json");
    if (!mj) throw Error("cannot read checkpoint manifest: " + prefix + ".json");
    nlohmann::json manifest = nlohmann::json::parse(mj);

    LayerDims dims;
    dims.d1 = manifest["dims"][0];
    dims.d2 = manifest["dims"][1];
    dims.d3 = manifest["dims"][2];
    dims.d_z = manifest["dims"][3];

    Checkpoint ck;
    ck.seed = manifest["seed"];
    ck.epoch = manifest["epoch"];
    ck.params = init_params(manifest["f_node"], dims, 0);

    std::ifstream pv(prefix + "_params.csv");
    if (!pv) throw Error("cannot read checkpoint params: " + prefix + "_params.csv");
    auto blocks = param_blocks(ck.params);
    size_t bi = 0;
    for (const auto& b : blocks) {
        if (manifest["blocks"][bi]["name"] != b.name || manifest["blocks"][bi]["size"] != b.size)
            throw Error("checkpoint layout mismatch at block " + b.name);
        for (int i = 0; i < b.size; ++i) {
            std::string line;
            if (!std::getline(pv, line)) throw Error("checkpoint params file truncated at " + b.name);
            b.data[i] = std::stod(line);
        }
        ++bi;
    }
    return ck;
}

}  // namespace gtclust
