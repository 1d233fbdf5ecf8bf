#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>

#include "sketchfem/assembly.hpp"

namespace sketchfem {

// Discrete Laplacian D^T D (no parameter scaling).
SparseColMajor laplacian(const GradientFactor& g);

// Orthonormal eigenvectors of the discrete Laplacian for its rho smallest
// eigenvalues, columns ordered by ascending eigenvalue. Within a numerically
// repeated eigenvalue cluster, columns are reordered by descending ||D psi||.
struct Basis {
    Eigen::MatrixXd Psi;            // n_dof x rho
    Eigen::VectorXd eigenvalues;    // ascending
    Eigen::VectorXd dpsi_col_norms; // ||D Psi_col|| = sqrt(psi' Delta psi)
    Eigen::VectorXd residuals;      // ||Delta psi - lambda psi|| per pair
    bool strict_norm_ordering = true;

    int rho() const { return static_cast<int>(Psi.cols()); }
};

struct EigOptions {
    int dense_threshold = 2000; // dense eigendecomposition at or below this
    double residual_tol = 1e-8; // relative to ||Delta||
    int max_krylov = 0;         // 0 = automatic
    std::uint64_t seed = 0x5eedULL;
};

Basis smallest_eigvecs(const SparseColMajor& delta, int rho, const EigOptions& opts = {});

struct ProjectionErr {
    double absolute = 0;
    double relative = 0;
    bool zero_input = false; // relative form undefined
};

ProjectionErr projection_error(const Eigen::VectorXd& u, const Eigen::MatrixXd& Psi);

} // namespace sketchfem
