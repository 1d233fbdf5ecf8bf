#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

#include "sketchfem/mesh.hpp"

namespace sketchfem {

using SparseRowMajor = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseColMajor = Eigen::SparseMatrix<double>;

enum class ProblemKind { dirichlet, neumann };

struct DofMap {
    std::vector<int> column;           // node -> dof column, -1 when eliminated
    std::vector<int> free_nodes;       // dof column -> node
    std::vector<int> eliminated_nodes; // bc column -> node
    int pinned_node = -1;              // Neumann uniqueness pin, else -1
    int n_dof() const { return static_cast<int>(free_nodes.size()); }
};

// Shape-function gradients stacked d rows per element. Columns are split
// between free dofs (D) and eliminated nodes (Dbc) so boundary lifting and
// partition-of-unity checks can reach eliminated values.
struct GradientFactor {
    int dim = 0;
    int k = 0;
    SparseRowMajor D;   // (k*dim) x n_dof
    SparseRowMajor Dbc; // (k*dim) x n_eliminated
    DofMap dof;
    std::uint64_t fingerprint = 0;

    long rows() const { return D.rows(); }
    int n_dof() const { return dof.n_dof(); }
};

// dim x (dim+1) matrix whose columns are the vertex shape gradients.
Eigen::MatrixXd element_shape_gradients(const Mesh& mesh, int elem);

// Dirichlet problems eliminate every node touching a Dirichlet facet; pure
// Neumann problems pin the lowest-index node to zero instead.
GradientFactor shape_gradients(const Mesh& mesh, ProblemKind problem);

struct ParameterQuery {
    Eigen::VectorXd p; // one positive value per element
};

struct Scaling {
    Eigen::VectorXd z; // per element, z = p .* omega
    double row_value(long row, int dim) const { return z[row / dim]; }
};

Scaling assemble_scaling(const ParameterQuery& q, const ElementVolumes& vols);

// Product construction: A = (Z^{1/2} D)^T (Z^{1/2} D), sparse SPD.
SparseColMajor assemble_stiffness(const GradientFactor& g, const Scaling& s);

// Per-element dense sum, kept as the reference route for tests/benchmarks.
Eigen::MatrixXd assemble_stiffness_reference(const GradientFactor& g, const Scaling& s);

struct LoadVector {
    Eigen::VectorXd b;       // free dofs, Dirichlet lifting folded in
    Eigen::VectorXd b_nodes; // all nodes before elimination, no lifting
};

// Centroid-rule quadrature: f_l * w_l/(d+1) per element vertex, g * |facet|/d
// per facet vertex; nonzero Dirichlet data lifted as b -= D^T Z (Dbc g_D).
LoadVector assemble_load(const Mesh& mesh,
                         const Eigen::VectorXd& f_elements,
                         const Eigen::VectorXd& g_neumann_facets,
                         const Eigen::VectorXd& g_dirichlet_nodes,
                         const GradientFactor& g, const Scaling& s);

// Sparse LDLT with a residual check ||Au - b|| <= 1e-10 ||b||.
Eigen::VectorXd exact_solve(const SparseColMajor& A, const Eigen::VectorXd& b);

} // namespace sketchfem
