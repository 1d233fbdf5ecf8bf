#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sketchfem {

enum class FacetTag : int { dirichlet = 1, neumann = 2 };

struct BoundaryFacet {
    std::array<int, 3> nodes{-1, -1, -1}; // first `dim` entries used
    FacetTag tag = FacetTag::dirichlet;
};

// Simplicial mesh (triangles for dim=2, tetrahedra for dim=3) with tagged
// boundary facets. Treated as immutable once built; construction normalizes
// element orientation so every signed volume is positive.
struct Mesh {
    int dim = 2;
    Eigen::MatrixXd nodes;    // n_nodes x dim
    Eigen::MatrixXi elements; // k x (dim+1)
    std::vector<BoundaryFacet> boundary_facets;

    int num_nodes() const { return static_cast<int>(nodes.rows()); }
    int num_elements() const { return static_cast<int>(elements.rows()); }
    int num_facets() const { return static_cast<int>(boundary_facets.size()); }
};

enum class BcLayout { all_dirichlet, all_neumann, mixed };

// Unit square split into 2m^2 triangles, or unit cube split into 6m^3
// tetrahedra (Kuhn subdivision). `bc` assigns facet tags; `mixed` puts
// Dirichlet on the x=0 and x=1 planes and Neumann elsewhere.
Mesh generate_structured(int dim, int m, BcLayout bc);

// Throws DataError when connectivity, orientation or tagging is broken.
void validate(const Mesh& mesh);

struct ElementVolumes {
    Eigen::VectorXd omega; // length k, strictly positive
};

// |det of edge-vector matrix| / d! per simplex; throws NumericalError for
// elements below the degeneracy tolerance (1e-14 x bounding-box^d).
ElementVolumes element_volumes(const Mesh& mesh);

double signed_volume(const Mesh& mesh, int elem);
double facet_measure(const Mesh& mesh, const BoundaryFacet& f);
Eigen::VectorXd element_centroid(const Mesh& mesh, int elem);
Eigen::VectorXd facet_centroid(const Mesh& mesh, const BoundaryFacet& f);

// Flips negatively oriented elements in place; returns how many were flipped.
int normalize_orientation(Mesh& mesh);

std::uint64_t mesh_fingerprint(const Mesh& mesh);

// Triangle/TetGen-style text files; indices are 1-based on disk, 0-based in
// memory. Coordinates round-trip bit-identically (17 significant digits).
Mesh load_mesh(const std::string& node_path, const std::string& ele_path,
               const std::string& face_path);
void write_mesh(const Mesh& mesh, const std::string& prefix);

} // namespace sketchfem
