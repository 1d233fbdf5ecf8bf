#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sketchfem/errors.hpp"
#include "sketchfem/mesh.hpp"

namespace sketchfem {
namespace {

struct LineReader {
    explicit LineReader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw DataError("cannot open " + path);
    }

    // Next non-empty, non-comment line; returns false at EOF.
    bool next(std::istringstream& out) {
        std::string line;
        while (std::getline(in_, line)) {
            ++lineno_;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            out = std::istringstream(line);
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw DataError(path_ + ":" + std::to_string(lineno_) + ": " + msg);
    }

    std::istringstream require(const std::string& what) {
        std::istringstream ss;
        if (!next(ss)) fail("unexpected end of file, expected " + what);
        return ss;
    }

    const std::string& path() const { return path_; }
    int lineno() const { return lineno_; }

private:
    std::string path_;
    std::ifstream in_;
    int lineno_ = 0;
};

int read_int(LineReader& r, std::istringstream& ss, const std::string& what) {
    long long v;
    if (!(ss >> v)) r.fail("expected integer " + what);
    return static_cast<int>(v);
}

double read_double(LineReader& r, std::istringstream& ss, const std::string& what) {
    double v;
    if (!(ss >> v)) r.fail("expected number " + what);
    return v;
}

int to_internal_index(LineReader& r, int idx, int count, const std::string& what) {
    const int zero_based = idx - 1;
    if (zero_based < 0 || zero_based >= count)
        r.fail(what + " index " + std::to_string(idx) + " out of range [1, " +
               std::to_string(count) + "]");
    return zero_based;
}

} // namespace

Mesh load_mesh(const std::string& node_path, const std::string& ele_path,
               const std::string& face_path) {
    Mesh mesh;

    {
        LineReader r(node_path);
        auto header = r.require("node header");
        const int n = read_int(r, header, "node count");
        const int d = read_int(r, header, "dimension");
        if (d != 2 && d != 3) r.fail("dimension must be 2 or 3");
        if (n < 0) r.fail("negative node count");
        mesh.dim = d;
        mesh.nodes.resize(n, d);
        for (int i = 0; i < n; ++i) {
            auto ss = r.require("node line");
            read_int(r, ss, "node index");
            for (int c = 0; c < d; ++c) mesh.nodes(i, c) = read_double(r, ss, "coordinate");
        }
    }

    {
        LineReader r(ele_path);
        auto header = r.require("element header");
        const int k = read_int(r, header, "element count");
        const int verts = read_int(r, header, "vertices per element");
        if (verts != mesh.dim + 1) r.fail("vertices per element must be dim+1");
        mesh.elements.resize(k, verts);
        for (int e = 0; e < k; ++e) {
            auto ss = r.require("element line");
            read_int(r, ss, "element index");
            for (int v = 0; v < verts; ++v)
                mesh.elements(e, v) =
                    to_internal_index(r, read_int(r, ss, "vertex"), mesh.num_nodes(), "node");
        }
    }

    {
        LineReader r(face_path);
        auto header = r.require("facet header");
        const int t = read_int(r, header, "facet count");
        const int d = read_int(r, header, "facet vertex count");
        if (d != mesh.dim) r.fail("facet vertex count must equal dimension");
        mesh.boundary_facets.reserve(t);
        for (int f = 0; f < t; ++f) {
            auto ss = r.require("facet line");
            read_int(r, ss, "facet index");
            BoundaryFacet facet;
            for (int v = 0; v < d; ++v)
                facet.nodes[v] =
                    to_internal_index(r, read_int(r, ss, "vertex"), mesh.num_nodes(), "node");
            const int tag = read_int(r, ss, "tag");
            if (tag != 1 && tag != 2) r.fail("tag must be 1 (Dirichlet) or 2 (Neumann)");
            facet.tag = static_cast<FacetTag>(tag);
            mesh.boundary_facets.push_back(facet);
        }
    }

    normalize_orientation(mesh);
    validate(mesh);
    return mesh;
}

void write_mesh(const Mesh& mesh, const std::string& prefix) {
    auto open = [](const std::string& path) {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (!f) throw DataError("cannot write " + path);
        return f;
    };

    std::FILE* f = open(prefix + ".node");
    std::fprintf(f, "%d %d 0 0\n", mesh.num_nodes(), mesh.dim);
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        std::fprintf(f, "%d", i + 1);
        for (int c = 0; c < mesh.dim; ++c) std::fprintf(f, " %.17g", mesh.nodes(i, c));
        std::fprintf(f, "\n");
    }
    std::fclose(f);

    f = open(prefix + ".ele");
    std::fprintf(f, "%d %d 0\n", mesh.num_elements(), mesh.dim + 1);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        std::fprintf(f, "%d", e + 1);
        for (int v = 0; v <= mesh.dim; ++v) std::fprintf(f, " %d", mesh.elements(e, v) + 1);
        std::fprintf(f, "\n");
    }
    std::fclose(f);

    f = open(prefix + ".face");
    std::fprintf(f, "%d %d 1\n", mesh.num_facets(), mesh.dim);
    for (int i = 0; i < mesh.num_facets(); ++i) {
        const auto& facet = mesh.boundary_facets[i];
        std::fprintf(f, "%d", i + 1);
        for (int v = 0; v < mesh.dim; ++v) std::fprintf(f, " %d", facet.nodes[v] + 1);
        std::fprintf(f, " %d\n", static_cast<int>(facet.tag));
    }
    std::fclose(f);
}

} // namespace sketchfem
