#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "sketchfem/assembly.hpp"
#include "sketchfem/subspace.hpp"

namespace sketchfem {

// Parameter-independent bundle computed once offline and shared read-only by
// every query worker.
struct OfflineArtifact {
    int dim = 0;
    int k = 0;
    int n_nodes = 0;
    int n_dof = 0;
    int rho = 0;
    ProblemKind problem = ProblemKind::dirichlet;

    GradientFactor gradients;
    Eigen::MatrixXd DPsi;        // (k*dim) x rho
    Eigen::MatrixXd Psi;         // n_dof x rho
    Eigen::VectorXd PsiTb;       // rho
    Eigen::VectorXd row_norms;   // k*dim, ||(D Psi)_row||
    Eigen::VectorXd omega;       // k
    Eigen::VectorXd b;           // n_dof load vector (lifting folded in)
    Eigen::VectorXd bc_values;   // solution values at eliminated nodes
    Eigen::VectorXd eigenvalues; // rho, ascending
    bool strict_norm_ordering = true;

    std::uint64_t fingerprint = 0; // mesh fingerprint
    std::uint64_t data_hash = 0;   // forcing/boundary data spec hash
    std::string version;

    long kd() const { return static_cast<long>(k) * dim; }

    // Scatter a dof vector into the full nodal field, filling eliminated
    // nodes with their boundary values.
    Eigen::VectorXd to_nodal_field(const Eigen::VectorXd& u_dof) const;
};

// Throws DataError when the parts were built from different meshes or their
// shapes disagree.
OfflineArtifact precompute(const Mesh& mesh, const GradientFactor& g,
                           const ElementVolumes& vols, const Basis& basis,
                           const Eigen::VectorXd& b, std::uint64_t data_hash = 0,
                           const Eigen::VectorXd& dirichlet_nodes = Eigen::VectorXd());

// Self-describing binary: "SKFEM1" magic, 8-byte LE header length, JSON
// header (dims, rho, dof map, fingerprint, endianness, section table), then
// little-endian float64 sections in order: D (row,col,value triplets),
// DPsi (row-major), Psi (row-major), Psi^T b, row_norms, omega, plus
// trailing sections b, bc_values and Dbc triplets.
void save_artifact(const OfflineArtifact& art, const std::string& path);
OfflineArtifact load_artifact(const std::string& path);

} // namespace sketchfem
