#include "sketchfem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sketchfem/errors.hpp"

namespace sketchfem {
namespace {

void check_score_gate(long rows, long cols) {
    if (rows < cols) throw DataError("leverage scores require rows >= cols");
    if (rows > kMaxScoreRows)
        throw DataError("refusing SVD diagnostics beyond desk scale (rows " +
                        std::to_string(rows) + " > " + std::to_string(kMaxScoreRows) + ")");
}

Eigen::MatrixXd scaled_rows_dense(const Eigen::MatrixXd& m, const Scaling& s, int dim) {
    Eigen::MatrixXd out = m;
    for (long row = 0; row < out.rows(); ++row)
        out.row(row) *= std::sqrt(s.row_value(row, dim));
    return out;
}

} // namespace

ScoreSet scores(const Eigen::MatrixXd& B) {
    check_score_gate(B.rows(), B.cols());
    Eigen::BDCSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    const double thresh = smax * 1e-12;
    const int rank = static_cast<int>((sv.array() > thresh).count());
    if (rank < B.cols())
        throw NumericalError("leverage scores undefined: numerical rank " + std::to_string(rank) +
                             " below column count " + std::to_string(B.cols()));

    ScoreSet out;
    out.rank = rank;
    out.leverage = svd.matrixU().rowwise().squaredNorm();
    out.rownorm = B.rowwise().squaredNorm();
    out.xi_leverage = out.leverage / out.leverage.sum();
    out.xi_rownorm = out.rownorm / out.rownorm.sum();
    return out;
}

HomogeneousBounds homogeneous_bounds(const Eigen::VectorXd& sigma_desc, int rho) {
    const long n = sigma_desc.size();
    if (rho < 1 || rho > n) throw DataError("rho outside [1, n]");
    for (long i = 1; i < n; ++i)
        if (sigma_desc[i] > sigma_desc[i - 1] + 1e-12 * std::abs(sigma_desc[i]))
            throw DataError("singular values must be sorted descending");

    // Trailing rho values are the smallest; within them the first is largest.
    const Eigen::VectorXd tail = sigma_desc.tail(rho).array().square();
    const double total = tail.sum();
    const double inv_rho = 1.0 / rho;

    HomogeneousBounds out;
    out.F_rho = tail[0] / total - inv_rho;
    out.bound.max_norm = std::max(out.F_rho, inv_rho - tail[rho - 1] / total);
    out.bound.two_norm = std::sqrt((tail.array() / total - inv_rho).square().sum());
    return out;
}

InhomogeneousBounds inhomogeneous_bounds(const Eigen::VectorXd& sigma, int rho, double frob_sq) {
    if (sigma.size() != rho) throw DataError("expected exactly rho singular values");
    const Eigen::VectorXd sq = sigma.array().square();
    const double total = sq.sum();
    if (frob_sq >= 0 && std::abs(frob_sq - total) > 1e-10 * std::max(total, 1.0))
        throw DataError("||X||_F^2 inconsistent with the singular values");

    InhomogeneousBounds out;
    out.pi = sq / total;
    const double inv_rho = 1.0 / rho;
    out.bound.max_norm =
        std::max(out.pi.maxCoeff() - inv_rho, inv_rho - out.pi.minCoeff());
    out.bound.two_norm = std::sqrt(std::max(out.pi.squaredNorm() - inv_rho, 0.0));
    return out;
}

std::pair<DistanceReport, DistanceReport>
distribution_distance(const OfflineArtifact& art, const Scaling& s, int rho) {
    if (rho < 1 || rho > art.rho)
        throw DataError("rho outside the artifact basis range [1, " + std::to_string(art.rho) + "]");
    if (art.n_dof > kMaxSpectralDim)
        throw DataError("refusing dense diagnostics beyond desk scale (n_dof " +
                        std::to_string(art.n_dof) + ")");

    auto report = [](const Eigen::MatrixXd& B, int r, char tag) {
        const ScoreSet sc = scores(B);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(B);
        DistanceReport rep;
        rep.rho = r;
        rep.matrix_tag = tag;
        const Eigen::VectorXd diff = sc.xi_leverage - sc.xi_rownorm;
        rep.two_norm = diff.norm();
        rep.max_norm = diff.cwiseAbs().maxCoeff();
        rep.bound = inhomogeneous_bounds(svd.singularValues().head(r), r).bound;
        return rep;
    };

    const Eigen::MatrixXd X = scaled_rows_dense(art.DPsi.leftCols(rho), s, art.dim);
    const Eigen::MatrixXd Y = scaled_rows_dense(Eigen::MatrixXd(art.gradients.D), s, art.dim);
    return {report(X, rho, 'X'), report(Y, art.n_dof, 'Y')};
}

RawGapDiagnostics raw_gap_diagnostics(const OfflineArtifact& art, const Scaling& s, int rho) {
    if (rho < 1 || rho > art.rho) throw DataError("rho outside the artifact basis range");
    const Eigen::MatrixXd X = scaled_rows_dense(art.DPsi.leftCols(rho), s, art.dim);
    Eigen::BDCSVD<Eigen::MatrixXd> svd_x(X);

    RawGapDiagnostics out;
    const double s1 = svd_x.singularValues()[0];
    const double sr = svd_x.singularValues()[rho - 1];
    out.x_gap = std::max(std::abs(1.0 - s1 * s1), std::abs(1.0 - sr * sr));

    const Eigen::MatrixXd Y = scaled_rows_dense(Eigen::MatrixXd(art.gradients.D), s, art.dim);
    out.y_trace_gap = std::abs(static_cast<double>(art.n_dof) - Y.squaredNorm()) /
                      static_cast<double>(art.kd());
    return out;
}

SpectralReport stiffness_spectral_report(const SparseColMajor& A, int dim, double p_min,
                                         const Eigen::VectorXd& omega) {
    if (A.rows() > kMaxSpectralDim)
        throw DataError("refusing dense spectral report beyond desk scale (n " +
                        std::to_string(A.rows()) + ")");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(A),
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("spectral report eigensolver failed");

    SpectralReport rep;
    rep.lambda_max = es.eigenvalues().maxCoeff();
    rep.lambda_min = es.eigenvalues().minCoeff();
    rep.max_diag = Eigen::VectorXd(A.diagonal()).maxCoeff();
    const double slack = 1e-9 * std::abs(rep.lambda_max);
    rep.sandwich_ok = rep.max_diag <= rep.lambda_max + slack &&
                      rep.lambda_max <= (dim + 1) * rep.max_diag + slack;

    // Mesh-regularity factor of the eigenvalue floor, reported with unit
    // constant; never asserted against lambda_min.
    const double k = static_cast<double>(omega.size());
    const double mean = omega.mean();
    if (dim == 2) {
        rep.lower_factor = p_min / k / (1.0 + std::log(mean / omega.minCoeff()));
    } else {
        const double avg_ratio = (mean / omega.array()).sqrt().sum() / k;
        rep.lower_factor = p_min / k * std::pow(avg_ratio, -2.0 / 3.0);
    }
    return rep;
}

VarianceReport variance_report(const OfflineArtifact& art, const Scaling& s,
                               const SamplingDistribution& dist, const Eigen::MatrixXd& G,
                               long c, double norm_D) {
    const long kd = art.kd();
    const double G_frob_sq = G.squaredNorm();

    long double exact_sum = 0, row_norm_sum = 0, budget_sum = 0, p_omega = 0;
    for (long row = 0; row < kd; ++row) {
        const double z = s.row_value(row, art.dim);
        const double rn = art.row_norms[row];
        if (dist.xi[row] > 0) exact_sum += z * z * rn * rn * rn * rn / dist.xi[row];
        row_norm_sum += std::sqrt(z) * rn;
        budget_sum += z * rn;
    }
    for (long e = 0; e < s.z.size(); ++e) p_omega += s.z[e];

    VarianceReport rep;
    const double inv_c = 1.0 / static_cast<double>(c);
    rep.exact = inv_c * (static_cast<double>(exact_sum) - G_frob_sq);
    rep.row_norm_bound = inv_c * static_cast<double>(row_norm_sum * row_norm_sum);
    rep.budget_form = inv_c * (static_cast<double>(budget_sum * budget_sum) - G_frob_sq);
    rep.domain_cap = norm_D > 0 ? inv_c * art.dim * art.dim *
                                      static_cast<double>(p_omega * p_omega) * norm_D * norm_D
                                : 0.0;
    return rep;
}

SampleBudget sample_budget(double epsilon, double delta, const Scaling& s,
                           const OfflineArtifact& art, const Eigen::MatrixXd& G) {
    if (!(epsilon > 0 && epsilon < 1) || !(delta > 0 && delta < 1))
        throw UsageError("epsilon and delta must lie in (0, 1)");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    SampleBudget out;
    out.lambda_min_G = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    out.kappa_G = out.lambda_min_G > 0 ? lmax / out.lambda_min_G
                                       : std::numeric_limits<double>::infinity();
    out.G_frob_sq = G.squaredNorm();

    long double sum = 0;
    for (long row = 0; row < art.kd(); ++row)
        sum += s.row_value(row, art.dim) * art.row_norms[row];
    out.sum_z_norm = static_cast<double>(sum);
    out.numerator = out.sum_z_norm * out.sum_z_norm - out.G_frob_sq;

    if (!(out.lambda_min_G > 1e-12 * std::max(lmax, 1e-300))) {
        // Ill-conditioned projected matrix: the budget blows up.
        out.degenerate = true;
        out.c_raw = std::numeric_limits<double>::infinity();
        out.c_min = -1;
        return out;
    }

    const double prefactor = (1.0 + 1.0 / epsilon) * (1.0 + 1.0 / epsilon);
    out.c_raw = prefactor * out.numerator / (out.lambda_min_G * out.lambda_min_G * delta);
    out.c_min = std::max<long>(1, static_cast<long>(std::ceil(out.c_raw)));
    return out;
}

ErrorBreakdown error_breakdown(const Eigen::VectorXd& u_star, const Eigen::MatrixXd& Psi,
                               const Eigen::VectorXd& r, const Eigen::VectorXd& r_hat,
                               const SparseColMajor& A, const Eigen::MatrixXd& G) {
    const int rho = static_cast<int>(Psi.cols());
    if (u_star.size() != Psi.rows() || r.size() != rho || r_hat.size() != rho ||
        A.rows() != u_star.size())
        throw DataError("error breakdown inputs disagree in dimension");
    if (A.rows() > kMaxSpectralDim)
        throw DataError("refusing dense diagnostics beyond desk scale");

    ErrorBreakdown out;
    const Eigen::VectorXd proj_coef = Psi.transpose() * u_star;
    const Eigen::VectorXd pi_u = Psi * proj_coef;

    out.projection = (u_star - pi_u).norm();
    out.subspace = (proj_coef - r).norm();   // ||Pi u - Psi r|| with orthonormal Psi
    out.simulation = (r - r_hat).norm();     // ||Psi r - Psi r_hat||
    out.total = (Psi * r_hat - u_star).norm();

    const double un = u_star.norm();
    out.u_norm = un;
    const double denom = un > 0 ? un : 1.0;
    out.projection_rel = out.projection / denom;
    out.subspace_rel = out.subspace / denom;
    out.simulation_rel = out.simulation / denom;
    out.total_rel = out.total / denom;
    const double rn = r.norm();
    out.r_rel = rn > 0 ? (r_hat - r).norm() / rn : (r_hat - r).norm();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esA(Eigen::MatrixXd(A),
                                                       Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esG(G, Eigen::EigenvaluesOnly);
    out.lambda_max_A = esA.eigenvalues().maxCoeff();
    out.lambda_min_A = esA.eigenvalues().minCoeff();
    out.lambda_rho_A = esA.eigenvalues()[A.rows() - rho]; // rho-th largest
    out.lambda_max_G = esG.eigenvalues().maxCoeff();
    out.lambda_min_G = esG.eigenvalues().minCoeff();
    out.kappa_G = out.lambda_max_G / out.lambda_min_G;

    out.psi_r_norm = rn; // ||Psi r|| = ||r||
    out.epsilon_realized = rn > 0 ? out.simulation / rn : 0.0;

    const double amplification = out.lambda_max_A / out.lambda_min_G;
    out.subspace_bound = amplification * out.projection;
    out.subspace_bound_ok = out.subspace <= out.subspace_bound + 1e-9 * std::max(1.0, out.subspace_bound);
    out.total_bound = amplification * out.projection + out.epsilon_realized * out.psi_r_norm;
    out.total_bound_best =
        (out.lambda_max_A / out.lambda_rho_A) * out.projection + out.epsilon_realized * out.psi_r_norm;
    out.total_bound_worst =
        (out.lambda_max_A / out.lambda_min_A) * out.projection + out.epsilon_realized * out.psi_r_norm;
    out.psi_r_bound =
        pi_u.norm() +
        (out.kappa_G + (out.lambda_max_A - out.lambda_max_G) / out.lambda_min_G) * out.projection;
    return out;
}

} // namespace sketchfem
