#include "gtclust/hetero_consensus.hpp"

#include "gtclust/jacobi.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace gtclust {

void EnsembleRun::validate() const {
    if (partitions.empty()) throw Error("ensemble: at least one partition required");
    const int T = partitions.front().size();
    for (const auto& p : partitions)
        if (p.size() != T) throw Error("ensemble: partition length mismatch");
}

ConsensusMatrix co_association(const EnsembleRun& partitions) {
    partitions.validate();
    const int T = partitions.length();
    const int M = partitions.members();

    Matrix counts = Matrix::Zero(T, T);
    for (const auto& p : partitions.partitions)
        for (int i = 0; i < T; ++i)
            for (int j = i; j < T; ++j)
                if (p.labels[static_cast<size_t>(i)] == p.labels[static_cast<size_t>(j)]) {
                    counts(i, j) += 1.0;
                    counts(j, i) = counts(i, j);
                }

    ConsensusMatrix cm;
    cm.kind = ConsensusKind::CoAssociation;
    cm.data = counts / static_cast<double>(M);
    // counts(i,j) was written twice for i == j; fix the diagonal to exactly 1
    for (int i = 0; i < T; ++i) cm.data(i, i) = 1.0;
    return cm;
}

ConsensusMatrix post_process(const ConsensusMatrix& cm, const PostProcessConfig& cfg) {
    if (cm.kind != ConsensusKind::CoAssociation)
        throw Error("post_process: expects a co-association matrix");
    if (cfg.min_threshold < 0 || cfg.min_threshold >= 1)
        throw Error("post_process: min_threshold must be in [0,1)");
    const int T = cm.size();

    ConsensusMatrix out;
    out.kind = ConsensusKind::CoAssociation;
    out.data = cm.data;
    if (cfg.normalize) {
        Vector deg = cm.data.rowwise().sum();
        Vector dinv_sqrt(T);
        for (int i = 0; i < T; ++i) dinv_sqrt(i) = deg(i) > 0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
        out.data = dinv_sqrt.asDiagonal() * cm.data * dinv_sqrt.asDiagonal();
    }
    for (int i = 0; i < T; ++i)
        for (int j = 0; j < T; ++j)
            if (out.data(i, j) < cfg.min_threshold) out.data(i, j) = 0.0;
    return out;
}

long long partition_distance(const Partition& p1, const Partition& p2) {
    if (p1.size() != p2.size()) throw Error("partition_distance: length mismatch");
    const int n = p1.size();
    long long mu = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (p1.labels[static_cast<size_t>(i)] == p1.labels[static_cast<size_t>(j)] &&
                p2.labels[static_cast<size_t>(i)] != p2.labels[static_cast<size_t>(j)])
                ++mu;
    return mu;
}

ConsensusMatrix connectivity(const Partition& p) {
    const int T = p.size();
    ConsensusMatrix cm;
    cm.kind = ConsensusKind::Connectivity;
    cm.data.resize(T, T);
    for (int i = 0; i < T; ++i)
        for (int j = 0; j < T; ++j)
            cm.data(i, j) = p.labels[static_cast<size_t>(i)] == p.labels[static_cast<size_t>(j)] ? 1.0 : 0.0;
    return cm;
}

namespace {

constexpr double kDenomGuard = 1e-12;
constexpr double kNndsvdZeroFill = 1e-6;
constexpr double kTraceSlack = 1e-9;

// NNDSVD: factors start from the positive sections of the leading singular
// pairs of M (computed via Jacobi on M^T M); exact zeros get a small fill so
// multiplicative updates cannot lock them at zero.
Matrix nndsvd_init(const Matrix& m, int r) {
    const int T = static_cast<int>(m.rows());
    EigenDecomposition ed = jacobi_eigen(m.transpose() * m);

    Matrix q(T, r);
    for (int j = 0; j < r; ++j) {
        const int idx = T - 1 - j;  // eigenvalues ascending -> take from the top
        double sv = std::sqrt(std::max(0.0, ed.eigenvalues(idx)));
        Vector v = ed.eigenvectors.col(idx);
        Vector u = sv > kDenomGuard ? Vector((m * v) / sv) : v;

        if (j == 0) {
            q.col(0) = std::sqrt(sv) * u.cwiseAbs();
            continue;
        }
        Vector up = u.cwiseMax(0.0), un = (-u).cwiseMax(0.0);
        Vector vp = v.cwiseMax(0.0), vn = (-v).cwiseMax(0.0);
        const double mp = up.norm() * vp.norm();
        const double mn = un.norm() * vn.norm();
        Vector dir;
        double mass;
        if (mp >= mn) {
            dir = up.norm() > 0 ? Vector(up / up.norm()) : up;
            mass = mp;
        } else {
            dir = un.norm() > 0 ? Vector(un / un.norm()) : un;
            mass = mn;
        }
        q.col(j) = std::sqrt(sv * mass) * dir;
    }
    for (int i = 0; i < T; ++i)
        for (int j = 0; j < r; ++j)
            if (q(i, j) < kNndsvdZeroFill) q(i, j) = kNndsvdZeroFill;
    return q;
}

}  // namespace

NmfConsensusResult nmf_consensus(const EnsembleRun& partitions, int r, int max_iter, double tol) {
    partitions.validate();
    const int T = partitions.length();
    if (r < 2) throw Error("nmf_consensus: r must be >= 2");
    if (r > T) throw Error("nmf_consensus: r must be <= T");

    Matrix mt = Matrix::Zero(T, T);
    for (const auto& p : partitions.partitions) mt += connectivity(p).data;
    mt /= static_cast<double>(partitions.members());

    NmfFactors f;
    f.r = r;
    f.Q = nndsvd_init(mt, r);
    f.S = Matrix::Identity(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            if (f.S(i, j) < kNndsvdZeroFill) f.S(i, j) = kNndsvdZeroFill;

    auto objective = [&](const Matrix& q, const Matrix& s) {
        return (mt - q * s * q.transpose()).squaredNorm();
    };

    double prev = objective(f.Q, f.S);
    f.objective_trace.push_back(prev);

    for (int iter = 0; iter < max_iter; ++iter) {
        Matrix mqs = mt * f.Q * f.S;
        Matrix q_den = f.Q * (f.Q.transpose() * mqs);
        Matrix q_next = f.Q;
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < r; ++j)
                q_next(i, j) *= std::sqrt(mqs(i, j) / (q_den(i, j) + kDenomGuard));

        Matrix qtq = q_next.transpose() * q_next;
        Matrix s_num = q_next.transpose() * mt * q_next;
        Matrix s_den = qtq * f.S * qtq;
        Matrix s_next = f.S;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
                s_next(i, j) *= std::sqrt(s_num(i, j) / (s_den(i, j) + kDenomGuard));

        double cur = objective(q_next, s_next);
        if (std::isnan(cur)) throw Error("nmf_consensus: update diverged (NaN objective)");
        if ((q_next.array() < 0).any() || (s_next.array() < 0).any())
            throw Error("nmf_consensus: factors lost non-negativity");
        if (cur > prev + kTraceSlack) break;  // roll back, keep the trace monotone

        f.Q = std::move(q_next);
        f.S = std::move(s_next);
        f.objective_trace.push_back(cur);
        const double improvement = prev - cur;
        prev = cur;
        if (improvement < tol) break;
    }

    NmfConsensusResult res;
    res.consensus.kind = ConsensusKind::Connectivity;
    res.consensus.data = f.Q * f.S * f.Q.transpose();
    res.factors = std::move(f);
    return res;
}

ConsensusMatrix pad_and_merge(const ConsensusMatrix& cm, const NmfFactors& f) {
    const int T = cm.size();
    if (static_cast<int>(f.Q.rows()) != T || f.r > T)
        throw Error("pad_and_merge: dimension mismatch between cm and Q");

    Matrix a = cm.data;
    a.leftCols(f.r) += f.Q;
    ConsensusMatrix merged;
    merged.kind = ConsensusKind::Merged;
    merged.data = (a + a.transpose()) / 2.0;
    return merged;
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    char buf[64];
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            if (j) out << ",";
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace gtclust
