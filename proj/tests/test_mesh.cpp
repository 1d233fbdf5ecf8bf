#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sketchfem/errors.hpp"
#include "sketchfem/mesh.hpp"

using namespace sketchfem;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "sketchfem_mesh_test";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("unit square m=1 splits into two half triangles") {
    const Mesh mesh = generate_structured(2, 1, BcLayout::all_dirichlet);
    CHECK(mesh.num_nodes() == 4);
    CHECK(mesh.num_elements() == 2);
    CHECK(mesh.num_facets() == 4);
    const ElementVolumes vols = element_volumes(mesh);
    CHECK(vols.omega[0] == doctest::Approx(0.5));
    CHECK(vols.omega[1] == doctest::Approx(0.5));
    validate(mesh);
}

TEST_CASE("unit cube m=1 Kuhn subdivision has six tets of volume 1/6") {
    const Mesh mesh = generate_structured(3, 1, BcLayout::all_neumann);
    CHECK(mesh.num_elements() == 6);
    CHECK(mesh.num_nodes() == 8);
    const ElementVolumes vols = element_volumes(mesh);
    for (int e = 0; e < 6; ++e) CHECK(vols.omega[e] == doctest::Approx(1.0 / 6.0));
    for (const auto& f : mesh.boundary_facets) CHECK(f.tag == FacetTag::neumann);
    validate(mesh);
}

TEST_CASE("m=4 square has the combinatorial counts") {
    const Mesh mesh = generate_structured(2, 4, BcLayout::all_dirichlet);
    CHECK(mesh.num_elements() == 32);
    CHECK(mesh.num_nodes() == 25);
    CHECK(mesh.num_facets() == 16);
}

TEST_CASE("generated meshes validate and fill the domain for every m in [1,16]") {
    for (const int dim : {2, 3}) {
        for (int m = 1; m <= 16; ++m) {
            CAPTURE(dim);
            CAPTURE(m);
            const Mesh mesh = generate_structured(dim, m, BcLayout::mixed);
            validate(mesh);
            const ElementVolumes vols = element_volumes(mesh);
            CHECK(vols.omega.sum() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(vols.omega.minCoeff() > 0);
        }
    }
}

TEST_CASE("mixed layout tags only the x-planes Dirichlet") {
    const Mesh mesh = generate_structured(2, 3, BcLayout::mixed);
    int dirichlet = 0, neumann = 0;
    for (const auto& f : mesh.boundary_facets) {
        if (f.tag == FacetTag::dirichlet) {
            ++dirichlet;
            for (int v = 0; v < 2; ++v) {
                const double x = mesh.nodes(f.nodes[v], 0);
                CHECK((x == doctest::Approx(0.0) || x == doctest::Approx(1.0)));
            }
        } else {
            ++neumann;
        }
    }
    CHECK(dirichlet == 6);
    CHECK(neumann == 6);
}

TEST_CASE("round-trip write/load reproduces the mesh bit-identically") {
    const auto dir = temp_dir();
    for (const int dim : {2, 3}) {
        const Mesh mesh = generate_structured(dim, 3, BcLayout::mixed);
        const std::string prefix = (dir / ("rt" + std::to_string(dim))).string();
        write_mesh(mesh, prefix);
        const Mesh loaded = load_mesh(prefix + ".node", prefix + ".ele", prefix + ".face");
        REQUIRE(loaded.num_nodes() == mesh.num_nodes());
        REQUIRE(loaded.num_elements() == mesh.num_elements());
        CHECK(loaded.nodes == mesh.nodes); // exact: 17 significant digits
        CHECK(loaded.elements == mesh.elements);
        REQUIRE(loaded.num_facets() == mesh.num_facets());
        CHECK(mesh_fingerprint(loaded) == mesh_fingerprint(mesh));
    }
}

TEST_CASE("loader matches the generator on the 2-triangle square") {
    const auto dir = temp_dir();
    const std::string prefix = (dir / "two_tri").string();
    {
        std::ofstream node(prefix + ".node");
        node << "4 2 0 0\n1 0 0\n2 1 0\n3 1 1\n4 0 1\n";
        std::ofstream ele(prefix + ".ele");
        ele << "2 3 0\n1 1 2 3\n2 1 3 4\n";
        std::ofstream face(prefix + ".face");
        face << "4 2 1\n1 1 2 1\n2 2 3 1\n3 3 4 1\n4 4 1 1\n";
    }
    const Mesh loaded = load_mesh(prefix + ".node", prefix + ".ele", prefix + ".face");
    const Mesh generated = generate_structured(2, 1, BcLayout::all_dirichlet);
    CHECK(loaded.num_nodes() == generated.num_nodes());
    CHECK(loaded.num_elements() == generated.num_elements());
    const ElementVolumes vols = element_volumes(loaded);
    CHECK(vols.omega.sum() == doctest::Approx(1.0));
}

TEST_CASE("out-of-range node index is a data error with location") {
    const auto dir = temp_dir();
    const std::string prefix = (dir / "bad_idx").string();
    {
        std::ofstream node(prefix + ".node");
        node << "3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n";
        std::ofstream ele(prefix + ".ele");
        ele << "1 3 0\n1 1 2 9\n";
        std::ofstream face(prefix + ".face");
        face << "0 2 1\n";
    }
    CHECK_THROWS_WITH_AS(load_mesh(prefix + ".node", prefix + ".ele", prefix + ".face"),
                         doctest::Contains(".ele:2"), DataError);
}

TEST_CASE("clockwise element is accepted and reoriented") {
    const auto dir = temp_dir();
    const std::string prefix = (dir / "cw").string();
    {
        std::ofstream node(prefix + ".node");
        node << "3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n";
        std::ofstream ele(prefix + ".ele");
        ele << "1 3 0\n1 1 3 2\n"; // clockwise: signed area -0.5
        std::ofstream face(prefix + ".face");
        face << "3 2 1\n1 1 2 1\n2 2 3 1\n3 3 1 1\n";
    }
    const Mesh mesh = load_mesh(prefix + ".node", prefix + ".ele", prefix + ".face");
    CHECK(signed_volume(mesh, 0) == doctest::Approx(0.5));
}

TEST_CASE("parse error reports the offending line") {
    const auto dir = temp_dir();
    const std::string prefix = (dir / "parse").string();
    {
        std::ofstream node(prefix + ".node");
        node << "2 2 0 0\n1 0 0\n2 oops 0\n";
    }
    CHECK_THROWS_WITH_AS(load_mesh(prefix + ".node", prefix + ".ele", prefix + ".face"),
                         doctest::Contains(".node:3"), DataError);
}

TEST_CASE("degenerate element is rejected with its id") {
    Mesh mesh;
    mesh.dim = 2;
    mesh.nodes.resize(3, 2);
    mesh.nodes << 0, 0, 1, 0, 2, 0; // collinear
    mesh.elements.resize(1, 3);
    mesh.elements << 0, 1, 2;
    CHECK_THROWS_WITH_AS(element_volumes(mesh), doctest::Contains("element 0"), NumericalError);
    CHECK_THROWS_AS(validate(mesh), DataError);
}

TEST_CASE("validate rejects an untagged boundary face") {
    Mesh mesh = generate_structured(2, 2, BcLayout::all_dirichlet);
    mesh.boundary_facets.pop_back();
    CHECK_THROWS_WITH_AS(validate(mesh), doctest::Contains("cover"), DataError);
}

TEST_CASE("validate rejects a doubly tagged facet") {
    Mesh mesh = generate_structured(2, 2, BcLayout::all_dirichlet);
    mesh.boundary_facets.push_back(mesh.boundary_facets.front());
    CHECK_THROWS_AS(validate(mesh), DataError);
}

TEST_CASE("facet measures: edges in 2d, triangle areas in 3d") {
    const Mesh sq = generate_structured(2, 2, BcLayout::all_dirichlet);
    double perimeter = 0;
    for (const auto& f : sq.boundary_facets) perimeter += facet_measure(sq, f);
    CHECK(perimeter == doctest::Approx(4.0));

    const Mesh cube = generate_structured(3, 2, BcLayout::all_neumann);
    double surface = 0;
    for (const auto& f : cube.boundary_facets) surface += facet_measure(cube, f);
    CHECK(surface == doctest::Approx(6.0));
}
