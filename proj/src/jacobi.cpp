#include "gtclust/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gtclust {

namespace {

double off_diagonal_sq(const Matrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return 2.0 * s;
}

}  // namespace

EigenDecomposition jacobi_eigen(const Matrix& a, double tol, int max_sweeps) {
    if (a.rows() != a.cols()) throw Error("jacobi_eigen: matrix must be square");
    const int n = static_cast<int>(a.rows());
    if (!a.isApprox(a.transpose(), 1e-12)) throw Error("jacobi_eigen: matrix must be symmetric");

    Matrix m = (a + a.transpose()) / 2.0;  // exact symmetry for the rotations
    Matrix v = Matrix::Identity(n, n);

    const double norm = std::max(m.norm(), 1e-300);
    const double thresh_sq = (tol * norm) * (tol * norm);

    for (int sweep = 0; sweep < max_sweeps && off_diagonal_sq(m) > thresh_sq; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double app = m(p, p), aqq = m(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                // stable tangent of the rotation angle
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int i = 0; i < n; ++i) {
                    const double mip = m(i, p), miq = m(i, q);
                    m(i, p) = c * mip - s * miq;
                    m(i, q) = s * mip + c * miq;
                }
                for (int i = 0; i < n; ++i) {
                    const double mpi = m(p, i), mqi = m(q, i);
                    m(p, i) = c * mpi - s * mqi;
                    m(q, i) = s * mpi + c * mqi;
                }
                m(p, q) = 0.0;
                m(q, p) = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return m(i, i) < m(j, j); });

    EigenDecomposition d;
    d.eigenvalues.resize(n);
    d.eigenvectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        d.eigenvalues(i) = m(order[static_cast<size_t>(i)], order[static_cast<size_t>(i)]);
        d.eigenvectors.col(i) = v.col(order[static_cast<size_t>(i)]);
    }
    return d;
}

}  // namespace gtclust
