#include "sketchfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "sketchfem/errors.hpp"
#include "sketchfem/parallel.hpp"

namespace sketchfem {

Eigen::MatrixXd element_shape_gradients(const Mesh& mesh, int elem) {
    const int d = mesh.dim;
    Eigen::MatrixXd edges(d, d);
    for (int j = 0; j < d; ++j)
        edges.col(j) =
            (mesh.nodes.row(mesh.elements(elem, j + 1)) - mesh.nodes.row(mesh.elements(elem, 0)))
                .transpose();

    // Gradients of the barycentric shape functions: columns 1..d are the rows
    // of edges^{-1}; column 0 closes the partition of unity.
    Eigen::MatrixXd grads(d, d + 1);
    const Eigen::MatrixXd inv = edges.inverse();
    for (int j = 0; j < d; ++j) grads.col(j + 1) = inv.row(j).transpose();
    grads.col(0) = -grads.rightCols(d).rowwise().sum();
    return grads;
}

GradientFactor shape_gradients(const Mesh& mesh, ProblemKind problem) {
    const int d = mesh.dim;
    const int n = mesh.num_nodes();
    const int k = mesh.num_elements();

    GradientFactor g;
    g.dim = d;
    g.k = k;
    g.fingerprint = mesh_fingerprint(mesh);

    std::vector<bool> eliminated(n, false);
    if (problem == ProblemKind::dirichlet) {
        bool any = false;
        for (const auto& f : mesh.boundary_facets) {
            if (f.tag != FacetTag::dirichlet) continue;
            any = true;
            for (int v = 0; v < d; ++v) eliminated[f.nodes[v]] = true;
        }
        if (!any)
            throw DataError("Dirichlet problem requires at least one Dirichlet-tagged facet");
    } else {
        for (const auto& f : mesh.boundary_facets)
            if (f.tag == FacetTag::dirichlet)
                throw DataError("pure Neumann problem on a mesh with Dirichlet-tagged facets");
        if (n == 0) throw DataError("empty mesh");
        g.dof.pinned_node = 0; // lowest-index node fixed to zero for uniqueness
        eliminated[0] = true;
    }

    g.dof.column.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        if (eliminated[i]) {
            g.dof.column[i] = -1;
            g.dof.eliminated_nodes.push_back(i);
        } else {
            g.dof.column[i] = static_cast<int>(g.dof.free_nodes.size());
            g.dof.free_nodes.push_back(i);
        }
    }
    const int n_free = g.dof.n_dof();
    const int n_elim = static_cast<int>(g.dof.eliminated_nodes.size());
    std::vector<int> bc_column(n, -1);
    for (int i = 0; i < n_elim; ++i) bc_column[g.dof.eliminated_nodes[i]] = i;

    std::vector<Eigen::Triplet<double>> trips, trips_bc;
    trips.reserve(static_cast<size_t>(k) * d * (d + 1));
    trips_bc.reserve(static_cast<size_t>(k) * d);
    for (int e = 0; e < k; ++e) {
        const Eigen::MatrixXd grads = element_shape_gradients(mesh, e);
        for (int v = 0; v <= d; ++v) {
            const int node = mesh.elements(e, v);
            const int col = g.dof.column[node];
            for (int r = 0; r < d; ++r) {
                const long row = static_cast<long>(e) * d + r;
                if (col >= 0)
                    trips.emplace_back(row, col, grads(r, v));
                else
                    trips_bc.emplace_back(row, bc_column[node], grads(r, v));
            }
        }
    }

    g.D.resize(static_cast<long>(k) * d, n_free);
    g.D.setFromTriplets(trips.begin(), trips.end());
    g.D.makeCompressed();
    g.Dbc.resize(static_cast<long>(k) * d, n_elim);
    g.Dbc.setFromTriplets(trips_bc.begin(), trips_bc.end());
    g.Dbc.makeCompressed();
    return g;
}

Scaling assemble_scaling(const ParameterQuery& q, const ElementVolumes& vols) {
    if (q.p.size() != vols.omega.size())
        throw DataError("parameter vector length " + std::to_string(q.p.size()) +
                        " does not match element count " + std::to_string(vols.omega.size()));
    for (long i = 0; i < q.p.size(); ++i)
        if (!(q.p[i] > 0))
            throw DataError("admissibility violation: parameter " + std::to_string(q.p[i]) +
                            " at element " + std::to_string(i) + " is not strictly positive");
    Scaling s;
    s.z = q.p.cwiseProduct(vols.omega);
    return s;
}

namespace {

SparseRowMajor scaled_rows(const GradientFactor& g, const Scaling& s, bool sqrt_scale) {
    if (s.z.size() != g.k) throw DataError("scaling length does not match element count");
    SparseRowMajor Y = g.D;
    for (long row = 0; row < Y.rows(); ++row) {
        const double w = sqrt_scale ? std::sqrt(s.row_value(row, g.dim)) : s.row_value(row, g.dim);
        for (SparseRowMajor::InnerIterator it(Y, row); it; ++it) it.valueRef() *= w;
    }
    return Y;
}

} // namespace

SparseColMajor assemble_stiffness(const GradientFactor& g, const Scaling& s) {
    const SparseRowMajor Y = scaled_rows(g, s, /*sqrt_scale=*/true);
    const SparseColMajor Yc(Y);
    SparseColMajor A = Yc.transpose() * Yc;
    A.makeCompressed();
    return A;
}

Eigen::MatrixXd assemble_stiffness_reference(const GradientFactor& g, const Scaling& s) {
    // Element-by-element sum of z_l D_l^T D_l over the free columns.
    const int n = g.n_dof();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd D = Eigen::MatrixXd(g.D);
    for (int e = 0; e < g.k; ++e) {
        const Eigen::MatrixXd block = D.middleRows(static_cast<long>(e) * g.dim, g.dim);
        A += s.z[e] * block.transpose() * block;
    }
    return A;
}

LoadVector assemble_load(const Mesh& mesh, const Eigen::VectorXd& f_elements,
                         const Eigen::VectorXd& g_neumann_facets,
                         const Eigen::VectorXd& g_dirichlet_nodes, const GradientFactor& g,
                         const Scaling& s) {
    const int d = mesh.dim;
    if (f_elements.size() != mesh.num_elements())
        throw DataError("forcing vector length does not match element count");
    if (g_neumann_facets.size() != mesh.num_facets())
        throw DataError("missing boundary data: Neumann values required for every tagged facet");
    if (g_dirichlet_nodes.size() != mesh.num_nodes())
        throw DataError("Dirichlet value vector length does not match node count");

    const ElementVolumes vols = element_volumes(mesh);
    LoadVector out;
    out.b_nodes = Eigen::VectorXd::Zero(mesh.num_nodes());

    // Volume term, exact for piecewise-constant f against linear elements.
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double w = f_elements[e] * vols.omega[e] / (d + 1);
        for (int v = 0; v <= d; ++v) out.b_nodes[mesh.elements(e, v)] += w;
    }
    // Surface term on Neumann facets.
    for (int t = 0; t < mesh.num_facets(); ++t) {
        const auto& facet = mesh.boundary_facets[t];
        if (facet.tag != FacetTag::neumann) continue;
        const double w = g_neumann_facets[t] * facet_measure(mesh, facet) / d;
        for (int v = 0; v < d; ++v) out.b_nodes[facet.nodes[v]] += w;
    }

    out.b.resize(g.n_dof());
    for (int col = 0; col < g.n_dof(); ++col) out.b[col] = out.b_nodes[g.dof.free_nodes[col]];

    // Dirichlet lifting: b -= D^T Z (Dbc g_D). The Neumann pin is fixed at
    // zero, so it contributes nothing.
    const int n_elim = static_cast<int>(g.dof.eliminated_nodes.size());
    if (n_elim > 0) {
        Eigen::VectorXd g_elim(n_elim);
        for (int i = 0; i < n_elim; ++i) {
            const int node = g.dof.eliminated_nodes[i];
            g_elim[i] = (node == g.dof.pinned_node) ? 0.0 : g_dirichlet_nodes[node];
        }
        if ((g_elim.array() != 0.0).any()) {
            Eigen::VectorXd lifted = g.Dbc * g_elim;
            for (long row = 0; row < lifted.size(); ++row) lifted[row] *= s.row_value(row, d);
            out.b -= g.D.transpose() * lifted;
        }
    }
    return out;
}

Eigen::VectorXd exact_solve(const SparseColMajor& A, const Eigen::VectorXd& b) {
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw DataError("stiffness/load dimension mismatch");
    if (A.rows() == 0) return Eigen::VectorXd();

    Eigen::SimplicialLDLT<SparseColMajor> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("sparse LDLT factorization failed (input not SPD?)");
    const Eigen::VectorXd u = ldlt.solve(b);
    const double bnorm = b.norm();
    const double resid = (A * u - b).norm();
    if (resid > 1e-10 * std::max(bnorm, 1e-300) && bnorm > 0)
        throw NumericalError("solver breakdown: residual " + std::to_string(resid) +
                             " exceeds 1e-10 * ||b||");
    return u;
}

} // namespace sketchfem
