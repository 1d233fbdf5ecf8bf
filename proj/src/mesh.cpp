#include "sketchfem/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>

#include "sketchfem/errors.hpp"

namespace sketchfem {
namespace {

double factorial(int d) { return d == 2 ? 2.0 : 6.0; }

// Sorted vertex tuple used as a face key.
using FaceKey = std::array<int, 3>;

FaceKey face_key(const int* nodes, int d) {
    FaceKey key{-1, -1, -1};
    for (int i = 0; i < d; ++i) key[i] = nodes[i];
    std::sort(key.begin(), key.begin() + d);
    return key;
}

// Faces of element e: the d+1 subsets obtained by dropping one vertex.
std::vector<FaceKey> element_faces(const Mesh& mesh, int e) {
    const int d = mesh.dim;
    std::vector<FaceKey> out;
    out.reserve(d + 1);
    std::array<int, 3> face{};
    for (int drop = 0; drop <= d; ++drop) {
        int idx = 0;
        for (int v = 0; v <= d; ++v)
            if (v != drop) face[idx++] = mesh.elements(e, v);
        out.push_back(face_key(face.data(), d));
    }
    return out;
}

double bbox_extent(const Mesh& mesh) {
    if (mesh.num_nodes() == 0) return 1.0;
    const Eigen::VectorXd lo = mesh.nodes.colwise().minCoeff();
    const Eigen::VectorXd hi = mesh.nodes.colwise().maxCoeff();
    return std::max((hi - lo).maxCoeff(), 1e-300);
}

void fnv_accumulate(std::uint64_t& h, const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
}

} // namespace

double signed_volume(const Mesh& mesh, int elem) {
    const int d = mesh.dim;
    Eigen::MatrixXd edges(d, d);
    const auto row0 = mesh.nodes.row(mesh.elements(elem, 0));
    for (int j = 0; j < d; ++j)
        edges.col(j) = (mesh.nodes.row(mesh.elements(elem, j + 1)) - row0).transpose();
    return edges.determinant() / factorial(d);
}

int normalize_orientation(Mesh& mesh) {
    int flipped = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (signed_volume(mesh, e) < 0) {
            std::swap(mesh.elements(e, mesh.dim - 1), mesh.elements(e, mesh.dim));
            ++flipped;
        }
    }
    return flipped;
}

Mesh generate_structured(int dim, int m, BcLayout bc) {
    if (dim != 2 && dim != 3) throw UsageError("dim must be 2 or 3");
    if (m < 1) throw UsageError("subdivisions per axis must be >= 1");

    Mesh mesh;
    mesh.dim = dim;
    const int s = m + 1;
    const double h = 1.0 / m;

    if (dim == 2) {
        mesh.nodes.resize(s * s, 2);
        for (int j = 0; j < s; ++j)
            for (int i = 0; i < s; ++i)
                mesh.nodes.row(j * s + i) << i * h, j * h;

        mesh.elements.resize(2 * m * m, 3);
        int e = 0;
        auto idx = [s](int i, int j) { return j * s + i; };
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
                mesh.elements.row(e++) << idx(i, j), idx(i + 1, j), idx(i + 1, j + 1);
                mesh.elements.row(e++) << idx(i, j), idx(i + 1, j + 1), idx(i, j + 1);
            }
    } else {
        mesh.nodes.resize(s * s * s, 3);
        auto idx = [s](int i, int j, int k) { return (k * s + j) * s + i; };
        for (int k = 0; k < s; ++k)
            for (int j = 0; j < s; ++j)
                for (int i = 0; i < s; ++i)
                    mesh.nodes.row(idx(i, j, k)) << i * h, j * h, k * h;

        // Kuhn subdivision: six tetrahedra per cell along vertex paths
        // (0,0,0) -> (1,1,1), one per axis permutation.
        static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        mesh.elements.resize(6 * m * m * m, 4);
        int e = 0;
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < m; ++j)
                for (int i = 0; i < m; ++i)
                    for (const auto& perm : perms) {
                        int corner[3] = {i, j, k};
                        mesh.elements(e, 0) = idx(corner[0], corner[1], corner[2]);
                        for (int step = 0; step < 3; ++step) {
                            ++corner[perm[step]];
                            mesh.elements(e, step + 1) = idx(corner[0], corner[1], corner[2]);
                        }
                        ++e;
                    }
    }

    normalize_orientation(mesh);

    // Boundary facets are the faces incident to exactly one element.
    std::map<FaceKey, int> count;
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (const auto& key : element_faces(mesh, e)) ++count[key];

    const double tol = 1e-12;
    for (const auto& [key, c] : count) {
        if (c != 1) continue;
        BoundaryFacet f;
        f.nodes = key;
        if (bc == BcLayout::all_dirichlet) {
            f.tag = FacetTag::dirichlet;
        } else if (bc == BcLayout::all_neumann) {
            f.tag = FacetTag::neumann;
        } else {
            // Mixed: Dirichlet on the x=0 and x=1 planes, Neumann elsewhere.
            bool on_x0 = true, on_x1 = true;
            for (int i = 0; i < dim; ++i) {
                const double x = mesh.nodes(key[i], 0);
                on_x0 = on_x0 && std::abs(x) < tol;
                on_x1 = on_x1 && std::abs(x - 1.0) < tol;
            }
            f.tag = (on_x0 || on_x1) ? FacetTag::dirichlet : FacetTag::neumann;
        }
        mesh.boundary_facets.push_back(f);
    }
    return mesh;
}

void validate(const Mesh& mesh) {
    const int d = mesh.dim;
    if (d != 2 && d != 3) throw DataError("mesh dimension must be 2 or 3");
    if (mesh.nodes.cols() != d) throw DataError("node coordinate count does not match dimension");
    if (mesh.elements.cols() != d + 1) throw DataError("element vertex count does not match dimension");

    const int n = mesh.num_nodes();
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (int v = 0; v <= d; ++v) {
            const int node = mesh.elements(e, v);
            if (node < 0 || node >= n)
                throw DataError("element " + std::to_string(e) + " references node " +
                                std::to_string(node) + " outside [0, " + std::to_string(n) + ")");
        }

    const double vol_tol = 1e-14 * std::pow(bbox_extent(mesh), d);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double v = signed_volume(mesh, e);
        if (!(v > vol_tol))
            throw DataError("element " + std::to_string(e) +
                            " has non-positive or degenerate volume " + std::to_string(v));
    }

    std::map<FaceKey, int> count;
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (const auto& key : element_faces(mesh, e)) ++count[key];
    for (const auto& [key, c] : count)
        if (c > 2) throw DataError("face shared by more than two elements");

    std::map<FaceKey, int> tagged;
    for (const auto& f : mesh.boundary_facets) {
        const auto key = face_key(f.nodes.data(), d);
        for (int i = 0; i < d; ++i)
            if (key[i] < 0 || key[i] >= n) throw DataError("boundary facet references invalid node");
        auto it = count.find(key);
        if (it == count.end() || it->second != 1)
            throw DataError("boundary facet is not a once-counted element face");
        if (++tagged[key] > 1) throw DataError("boundary facet tagged more than once");
    }
    for (const auto& [key, c] : count)
        if (c == 1 && tagged.find(key) == tagged.end())
            throw DataError("boundary face without a tag: facet tags must cover the whole boundary");
}

ElementVolumes element_volumes(const Mesh& mesh) {
    ElementVolumes vols;
    vols.omega.resize(mesh.num_elements());
    const double tol = 1e-14 * std::pow(bbox_extent(mesh), mesh.dim);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double v = std::abs(signed_volume(mesh, e));
        if (v <= tol)
            throw NumericalError("element " + std::to_string(e) + " is degenerate (volume " +
                                 std::to_string(v) + ")");
        vols.omega[e] = v;
    }
    return vols;
}

double facet_measure(const Mesh& mesh, const BoundaryFacet& f) {
    if (mesh.dim == 2) {
        return (mesh.nodes.row(f.nodes[1]) - mesh.nodes.row(f.nodes[0])).norm();
    }
    const Eigen::Vector3d a = (mesh.nodes.row(f.nodes[1]) - mesh.nodes.row(f.nodes[0])).transpose();
    const Eigen::Vector3d b = (mesh.nodes.row(f.nodes[2]) - mesh.nodes.row(f.nodes[0])).transpose();
    return 0.5 * a.cross(b).norm();
}

Eigen::VectorXd element_centroid(const Mesh& mesh, int elem) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(mesh.dim);
    for (int v = 0; v <= mesh.dim; ++v) c += mesh.nodes.row(mesh.elements(elem, v)).transpose();
    return c / (mesh.dim + 1);
}

Eigen::VectorXd facet_centroid(const Mesh& mesh, const BoundaryFacet& f) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(mesh.dim);
    for (int v = 0; v < mesh.dim; ++v) c += mesh.nodes.row(f.nodes[v]).transpose();
    return c / mesh.dim;
}

std::uint64_t mesh_fingerprint(const Mesh& mesh) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    const std::int64_t dims[3] = {mesh.dim, mesh.num_nodes(), mesh.num_elements()};
    fnv_accumulate(h, dims, sizeof(dims));
    fnv_accumulate(h, mesh.nodes.data(), sizeof(double) * mesh.nodes.size());
    fnv_accumulate(h, mesh.elements.data(), sizeof(int) * mesh.elements.size());
    for (const auto& f : mesh.boundary_facets) {
        fnv_accumulate(h, f.nodes.data(), sizeof(f.nodes));
        const int tag = static_cast<int>(f.tag);
        fnv_accumulate(h, &tag, sizeof(tag));
    }
    return h;
}

} // namespace sketchfem
