#include "sketchfem/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "sketchfem/errors.hpp"
#include "sketchfem/rng.hpp"

namespace sketchfem {
namespace {

// Upper bound on ||Delta|| (Gershgorin), used to scale residual tolerances.
double norm_bound(const SparseColMajor& m) {
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(m.rows());
    for (int col = 0; col < m.outerSize(); ++col)
        for (SparseColMajor::InnerIterator it(m, col); it; ++it)
            rowsum[it.row()] += std::abs(it.value());
    return rowsum.size() > 0 ? rowsum.maxCoeff() : 0.0;
}

void canonical_sign(Eigen::Ref<Eigen::VectorXd> v) {
    long imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
}

// Shift-invert Lanczos with full reorthogonalization on Delta^{-1}: the
// smallest eigenvalues of Delta dominate the inverted spectrum, so a modest
// Krylov space converges them quickly.
void lanczos_smallest(const SparseColMajor& delta, int rho, const EigOptions& opts,
                      Eigen::MatrixXd& vecs, Eigen::VectorXd& vals) {
    const long n = delta.rows();
    Eigen::SimplicialLDLT<SparseColMajor> ldlt(delta);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("Laplacian factorization failed in shift-invert eigensolver");

    const double scale = norm_bound(delta);
    const CounterRng rng(opts.seed);

    int m = opts.max_krylov > 0 ? opts.max_krylov
                                : static_cast<int>(std::min<long>(n, 2L * rho + 40));
    for (;;) {
        Eigen::MatrixXd V(n, m);
        Eigen::VectorXd alpha(m), beta(m);
        Eigen::VectorXd v(n);
        for (long i = 0; i < n; ++i) v[i] = rng.uniform(i) - 0.5;
        v.normalize();
        V.col(0) = v;

        int built = m;
        for (int j = 0; j < m; ++j) {
            Eigen::VectorXd w = ldlt.solve(V.col(j));
            alpha[j] = V.col(j).dot(w);
            w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
            w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
            beta[j] = w.norm();
            if (j + 1 < m) {
                if (beta[j] < 1e-14) { built = j + 1; break; }
                V.col(j + 1) = w / beta[j];
            }
        }

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
        for (int j = 0; j < built; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < built) T(j, j + 1) = T(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");

        // Largest Ritz values of Delta^{-1} correspond to the smallest
        // eigenvalues of Delta.
        vecs.resize(n, rho);
        vals.resize(rho);
        bool converged = built >= rho;
        double worst = 0;
        for (int i = 0; i < rho && converged; ++i) {
            const int col = built - 1 - i;
            const Eigen::VectorXd y = V.leftCols(built) * es.eigenvectors().col(col);
            const double theta = es.eigenvalues()[col];
            if (theta <= 0) { converged = false; break; }
            const double lambda = 1.0 / theta;
            const Eigen::VectorXd resid = delta * y - lambda * y;
            worst = std::max(worst, resid.norm());
            if (resid.norm() > opts.residual_tol * scale) converged = false;
            vecs.col(i) = y;
            vals[i] = lambda;
        }
        if (converged) return;

        if (m >= n || (opts.max_krylov > 0 && m >= opts.max_krylov))
            throw NumericalError("eigensolver did not converge: achieved residual " +
                                 std::to_string(worst) + " with Krylov dimension " +
                                 std::to_string(m));
        m = static_cast<int>(std::min<long>(n, m + m / 2 + 8));
    }
}

} // namespace

SparseColMajor laplacian(const GradientFactor& g) {
    const SparseColMajor Dc(g.D);
    SparseColMajor delta = Dc.transpose() * Dc;
    delta.makeCompressed();
    return delta;
}

Basis smallest_eigvecs(const SparseColMajor& delta, int rho, const EigOptions& opts) {
    const long n = delta.rows();
    if (delta.cols() != n) throw DataError("Laplacian must be square");
    if (rho < 1 || rho > n)
        throw DataError("rho = " + std::to_string(rho) + " outside [1, " + std::to_string(n) + "]");

    Basis basis;
    const double scale = norm_bound(delta);

    if (n <= opts.dense_threshold) {
        const Eigen::MatrixXd dense(delta);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
        if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
        basis.Psi = es.eigenvectors().leftCols(rho);
        basis.eigenvalues = es.eigenvalues().head(rho);
    } else {
        lanczos_smallest(delta, rho, opts, basis.Psi, basis.eigenvalues);
    }

    for (int i = 0; i < rho; ++i) canonical_sign(basis.Psi.col(i));

    // ||D psi||^2 = psi' Delta psi; recomputed rather than trusting lambda.
    basis.dpsi_col_norms.resize(rho);
    basis.residuals.resize(rho);
    for (int i = 0; i < rho; ++i) {
        const Eigen::VectorXd dp = delta * basis.Psi.col(i);
        basis.dpsi_col_norms[i] = std::sqrt(std::max(basis.Psi.col(i).dot(dp), 0.0));
        basis.residuals[i] = (dp - basis.eigenvalues[i] * basis.Psi.col(i)).norm();
        if (basis.residuals[i] > opts.residual_tol * std::max(scale, 1e-300))
            throw NumericalError("eigenpair " + std::to_string(i) + " residual " +
                                 std::to_string(basis.residuals[i]) + " exceeds tolerance " +
                                 std::to_string(opts.residual_tol * scale));
    }

    // Within a numerically repeated eigenvalue cluster, order columns by
    // descending ||D psi||.
    const double cluster_tol =
        1e-8 * std::max(std::abs(basis.eigenvalues[rho - 1]), 1e-300);
    std::vector<int> order(rho);
    std::iota(order.begin(), order.end(), 0);
    int lo = 0;
    while (lo < rho) {
        int hi = lo + 1;
        while (hi < rho && basis.eigenvalues[hi] - basis.eigenvalues[hi - 1] <= cluster_tol) ++hi;
        std::stable_sort(order.begin() + lo, order.begin() + hi, [&](int a, int b) {
            return basis.dpsi_col_norms[a] > basis.dpsi_col_norms[b];
        });
        lo = hi;
    }
    bool permuted = false;
    for (int i = 0; i < rho; ++i) permuted = permuted || order[i] != i;
    if (permuted) {
        Eigen::MatrixXd P = basis.Psi;
        Eigen::VectorXd ev = basis.eigenvalues, nn = basis.dpsi_col_norms, rr = basis.residuals;
        for (int i = 0; i < rho; ++i) {
            basis.Psi.col(i) = P.col(order[i]);
            basis.eigenvalues[i] = ev[order[i]];
            basis.dpsi_col_norms[i] = nn[order[i]];
            basis.residuals[i] = rr[order[i]];
        }
    }

    basis.strict_norm_ordering = true;
    for (int i = 1; i < rho; ++i)
        if (!(basis.dpsi_col_norms[i] > basis.dpsi_col_norms[i - 1]))
            basis.strict_norm_ordering = false;

    return basis;
}

ProjectionErr projection_error(const Eigen::VectorXd& u, const Eigen::MatrixXd& Psi) {
    if (u.size() != Psi.rows()) throw DataError("vector length does not match basis rows");
    ProjectionErr out;
    const Eigen::VectorXd residual = u - Psi * (Psi.transpose() * u);
    out.absolute = residual.norm();
    const double un = u.norm();
    out.zero_input = un == 0.0;
    out.relative = out.zero_input ? 0.0 : out.absolute / un;
    return out;
}

} // namespace sketchfem
