#pragma once

#include <Eigen/Dense>

#include <utility>

#include "sketchfem/artifact.hpp"
#include "sketchfem/sketch.hpp"

namespace sketchfem {

// Dense SVD/eigendecomposition diagnostics are gated to desk scale.
inline constexpr long kMaxScoreRows = 50000; // k*d
inline constexpr int kMaxSpectralDim = 5000; // n_dof

struct ScoreSet {
    Eigen::VectorXd leverage;    // diag(U U^T), entries in [0,1]
    Eigen::VectorXd rownorm;     // squared row norms
    Eigen::VectorXd xi_leverage; // normalized
    Eigen::VectorXd xi_rownorm;  // normalized
    int rank = 0;
};

// Leverage and row-norm sampling scores via thin SVD. Requires rows >= cols
// and full column rank; throws NumericalError with the numerical rank.
ScoreSet scores(const Eigen::MatrixXd& B);

struct BoundPair {
    double max_norm = 0;
    double two_norm = 0;
};

// Homogeneous-scaling bounds on ||xi_leverage - xi_rownorm|| evaluated over
// the trailing rho singular values of D (input sorted descending).
// F_rho is the first term of the max-norm variant.
struct HomogeneousBounds {
    BoundPair bound;
    double F_rho = 0;
};
HomogeneousBounds homogeneous_bounds(const Eigen::VectorXd& sigma_desc, int rho);

// General-scaling bounds from the spectrum of X; pi_i = sigma_i^2 / ||X||_F^2.
struct InhomogeneousBounds {
    BoundPair bound;
    Eigen::VectorXd pi;
};
InhomogeneousBounds inhomogeneous_bounds(const Eigen::VectorXd& sigma, int rho,
                                         double frob_sq = -1.0);

struct DistanceReport {
    double two_norm = 0;
    double max_norm = 0;
    BoundPair bound;
    int rho = 0;
    char matrix_tag = 'X'; // 'X' projected, 'Y' unprojected
};

// Distances between leverage and row-norm distributions for X = Z^{1/2}DPsi
// (first `rho` basis columns) and Y = Z^{1/2}D, with their analytic bounds.
std::pair<DistanceReport, DistanceReport>
distribution_distance(const OfflineArtifact& art, const Scaling& s, int rho);

// Raw (unnormalized) score-gap diagnostics, reported only: the spectral gap
// of X from unit singular values and the trace gap of Y from orthonormality.
struct RawGapDiagnostics {
    double x_gap = 0;       // |1 - sigma_1(X)^2| v |1 - sigma_rho(X)^2|
    double y_trace_gap = 0; // |n - sum_i sigma_i(Y)^2| / (k d)
};
RawGapDiagnostics raw_gap_diagnostics(const OfflineArtifact& art, const Scaling& s, int rho);

struct SpectralReport {
    double lambda_max = 0;
    double lambda_min = 0;
    double max_diag = 0;
    bool sandwich_ok = false;    // max diag <= lambda_max <= (d+1) max diag
    double lower_factor = 0;     // mesh-dependent lower-bound factor (C = 1), report only
};
SpectralReport stiffness_spectral_report(const SparseColMajor& A, int dim,
                                         double p_min, const Eigen::VectorXd& omega);

// Sketch-variance quantities for a given sampling distribution.
struct VarianceReport {
    double exact = 0;          // (1/c)(sum z^2 ||.||^4 / xi - ||G||_F^2): exact E||G-Ghat||_F^2
    double row_norm_bound = 0; // (1/c)(sum_l ||X_l||)^2
    double domain_cap = 0;     // (d^2/c) p_Omega^2 ||D||^2, report only (norm_D passed in)
    double budget_form = 0;    // (1/c)((sum_l z_l ||(DPsi)_l||)^2 - ||G||_F^2), report only
};
VarianceReport variance_report(const OfflineArtifact& art, const Scaling& s,
                               const SamplingDistribution& dist,
                               const Eigen::MatrixXd& G, long c, double norm_D = 0);

struct SampleBudget {
    long c_min = 1;
    double c_raw = 0;
    double numerator = 0;    // (sum z ||(DPsi)_row||)^2 - ||G||_F^2
    double sum_z_norm = 0;
    double G_frob_sq = 0;
    double lambda_min_G = 0;
    double kappa_G = 0;
    bool degenerate = false; // lambda_min below threshold: budget undefined
};
SampleBudget sample_budget(double epsilon, double delta, const Scaling& s,
                           const OfflineArtifact& art, const Eigen::MatrixXd& G);

struct ErrorBreakdown {
    double projection = 0; // ||u - Pi u||
    double subspace = 0;   // ||Pi u - Psi r||
    double simulation = 0; // ||Psi r - Psi r_hat||
    double total = 0;      // ||Psi r_hat - u||

    double projection_rel = 0; // each relative to ||u||
    double subspace_rel = 0;
    double simulation_rel = 0;
    double total_rel = 0;
    double r_rel = 0; // ||r_hat - r|| / ||r||

    double kappa_G = 0;
    double lambda_max_A = 0;
    double lambda_min_A = 0;
    double lambda_min_G = 0;
    double lambda_max_G = 0;
    double lambda_rho_A = 0; // rho-th largest eigenvalue of A

    double u_norm = 0;             // ||u||
    double epsilon_realized = 0;   // simulation / ||Psi r||
    double total_bound = 0;        // (lmax(A)/lmin(G)) projection + eps ||Psi r||
    double total_bound_best = 0;   // kappa_rho(A) variant
    double total_bound_worst = 0;  // kappa(A) variant
    double subspace_bound = 0;     // (lmax(A)/lmin(G)) projection
    bool subspace_bound_ok = false;
    double psi_r_norm = 0;
    double psi_r_bound = 0;        // ||Pi u|| + (kappa(G) + (lmaxA-lmaxG)/lminG)||(I-Pi)u||
};

ErrorBreakdown error_breakdown(const Eigen::VectorXd& u_star, const Eigen::MatrixXd& Psi,
                               const Eigen::VectorXd& r, const Eigen::VectorXd& r_hat,
                               const SparseColMajor& A, const Eigen::MatrixXd& G);

} // namespace sketchfem
