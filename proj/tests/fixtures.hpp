#pragma once

#include <cstdint>

#include "sketchfem/artifact.hpp"
#include "sketchfem/assembly.hpp"
#include "sketchfem/mesh.hpp"
#include "sketchfem/pipeline.hpp"
#include "sketchfem/rng.hpp"
#include "sketchfem/subspace.hpp"

namespace sketchfem::testing {

// Reference triangle (0,0),(1,0),(0,1) with the hypotenuse tagged Dirichlet
// and the two legs Neumann, leaving exactly the origin vertex free.
inline Mesh reference_triangle() {
    Mesh mesh;
    mesh.dim = 2;
    mesh.nodes.resize(3, 2);
    mesh.nodes << 0, 0, 1, 0, 0, 1;
    mesh.elements.resize(1, 3);
    mesh.elements << 0, 1, 2;
    mesh.boundary_facets = {
        {{1, 2, -1}, FacetTag::dirichlet},
        {{0, 1, -1}, FacetTag::neumann},
        {{0, 2, -1}, FacetTag::neumann},
    };
    return mesh;
}

struct Fixture {
    Mesh mesh;
    GradientFactor g;
    ElementVolumes vols;
    Basis basis;
    LoadVector load;
    OfflineArtifact art;
};

// Structured-mesh fixture with constant forcing f and zero boundary data.
inline Fixture make_fixture(int dim, int m, BcLayout bc, ProblemKind problem, int rho,
                            double f = 1.0) {
    Fixture fx;
    fx.mesh = generate_structured(dim, m, bc);
    fx.g = shape_gradients(fx.mesh, problem);
    fx.vols = element_volumes(fx.mesh);
    fx.basis = smallest_eigvecs(laplacian(fx.g), rho);
    fx.load = assemble_load(fx.mesh, Eigen::VectorXd::Constant(fx.mesh.num_elements(), f),
                            Eigen::VectorXd::Zero(fx.mesh.num_facets()),
                            Eigen::VectorXd::Zero(fx.mesh.num_nodes()), fx.g,
                            Scaling{fx.vols.omega});
    fx.art = precompute(fx.mesh, fx.g, fx.vols, fx.basis, fx.load.b);
    return fx;
}

inline Eigen::VectorXd random_p(int k, double lo, double hi, std::uint64_t seed) {
    const CounterRng rng(seed);
    Eigen::VectorXd p(k);
    for (int i = 0; i < k; ++i) p[i] = rng.uniform(static_cast<std::uint64_t>(i), lo, hi);
    return p;
}

} // namespace sketchfem::testing
