#include "sketchfem/artifact.hpp"

#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sketchfem/errors.hpp"
#include "sketchfem/version.hpp"

namespace sketchfem {
namespace {

constexpr char kMagic[6] = {'S', 'K', 'F', 'E', 'M', '1'};

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_raw(std::FILE* f, const void* data, size_t bytes, const std::string& path) {
    if (bytes && std::fwrite(data, 1, bytes, f) != bytes)
        throw DataError("short write to " + path);
}

void read_raw(std::FILE* f, void* data, size_t bytes, const std::string& path) {
    if (bytes && std::fread(data, 1, bytes, f) != bytes)
        throw DataError("truncated artifact file " + path);
}

void write_section(std::FILE* f, const double* data, long count, const std::string& path) {
    write_raw(f, data, sizeof(double) * static_cast<size_t>(count), path);
}

std::vector<double> sparse_to_triplets(const SparseRowMajor& m) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(m.nonZeros()) * 3);
    for (long row = 0; row < m.rows(); ++row)
        for (SparseRowMajor::InnerIterator it(m, row); it; ++it) {
            out.push_back(static_cast<double>(it.row()));
            out.push_back(static_cast<double>(it.col()));
            out.push_back(it.value());
        }
    return out;
}

SparseRowMajor triplets_to_sparse(const std::vector<double>& t, long rows, long cols) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(t.size() / 3);
    for (size_t i = 0; i + 2 < t.size(); i += 3)
        trip.emplace_back(static_cast<long>(t[i]), static_cast<long>(t[i + 1]), t[i + 2]);
    SparseRowMajor m(rows, cols);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
    return std::strtoull(s.c_str(), nullptr, 16);
}

} // namespace

Eigen::VectorXd OfflineArtifact::to_nodal_field(const Eigen::VectorXd& u_dof) const {
    if (u_dof.size() != n_dof) throw DataError("dof vector length mismatch");
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n_nodes);
    for (int col = 0; col < n_dof; ++col) full[gradients.dof.free_nodes[col]] = u_dof[col];
    for (size_t i = 0; i < gradients.dof.eliminated_nodes.size(); ++i)
        full[gradients.dof.eliminated_nodes[i]] = bc_values[static_cast<long>(i)];
    return full;
}

OfflineArtifact precompute(const Mesh& mesh, const GradientFactor& g,
                           const ElementVolumes& vols, const Basis& basis,
                           const Eigen::VectorXd& b, std::uint64_t data_hash,
                           const Eigen::VectorXd& dirichlet_nodes) {
    if (g.fingerprint != mesh_fingerprint(mesh))
        throw DataError("fingerprint mismatch: gradient factor was built from a different mesh");
    if (basis.Psi.rows() != g.n_dof())
        throw DataError("basis rows do not match the gradient factor dof count");
    if (b.size() != g.n_dof()) throw DataError("load vector length does not match dof count");
    if (vols.omega.size() != g.k) throw DataError("element volume count mismatch");

    OfflineArtifact art;
    art.dim = g.dim;
    art.k = g.k;
    art.n_nodes = mesh.num_nodes();
    art.n_dof = g.n_dof();
    art.rho = basis.rho();
    art.problem = g.dof.pinned_node >= 0 ? ProblemKind::neumann : ProblemKind::dirichlet;
    art.gradients = g;
    art.DPsi = g.D * basis.Psi;
    art.Psi = basis.Psi;
    art.PsiTb = basis.Psi.transpose() * b;
    art.row_norms = art.DPsi.rowwise().norm();
    art.omega = vols.omega;
    art.b = b;
    art.eigenvalues = basis.eigenvalues;
    art.strict_norm_ordering = basis.strict_norm_ordering;
    art.fingerprint = g.fingerprint;
    art.data_hash = data_hash;
    art.version = version_string();

    const auto& elim = g.dof.eliminated_nodes;
    art.bc_values = Eigen::VectorXd::Zero(static_cast<long>(elim.size()));
    if (dirichlet_nodes.size() > 0) {
        if (dirichlet_nodes.size() != mesh.num_nodes())
            throw DataError("Dirichlet value vector length does not match node count");
        for (size_t i = 0; i < elim.size(); ++i)
            if (elim[i] != g.dof.pinned_node)
                art.bc_values[static_cast<long>(i)] = dirichlet_nodes[elim[i]];
    }
    return art;
}

void save_artifact(const OfflineArtifact& art, const std::string& path) {
    const std::vector<double> d_trip = sparse_to_triplets(art.gradients.D);
    const std::vector<double> dbc_trip = sparse_to_triplets(art.gradients.Dbc);

    nlohmann::json header;
    header["format"] = "SKFEM1";
    header["endianness"] = "little";
    header["version"] = art.version;
    header["dim"] = art.dim;
    header["k"] = art.k;
    header["kd"] = art.kd();
    header["n_nodes"] = art.n_nodes;
    header["n_dof"] = art.n_dof;
    header["rho"] = art.rho;
    header["problem"] = art.problem == ProblemKind::dirichlet ? "dirichlet" : "neumann";
    header["pinned_node"] = art.gradients.dof.pinned_node;
    header["dof_map"] = art.gradients.dof.column;
    header["fingerprint"] = hex64(art.fingerprint);
    header["data_hash"] = hex64(art.data_hash);
    header["eigenvalues"] = std::vector<double>(art.eigenvalues.data(),
                                                art.eigenvalues.data() + art.eigenvalues.size());
    header["strict_norm_ordering"] = art.strict_norm_ordering;
    header["nnz_D"] = art.gradients.D.nonZeros();
    header["nnz_Dbc"] = art.gradients.Dbc.nonZeros();
    header["sections"] = {
        {{"name", "D"}, {"count", static_cast<long>(d_trip.size())}},
        {{"name", "DPsi"}, {"count", art.DPsi.size()}},
        {{"name", "Psi"}, {"count", art.Psi.size()}},
        {{"name", "PsiTb"}, {"count", art.PsiTb.size()}},
        {{"name", "row_norms"}, {"count", art.row_norms.size()}},
        {{"name", "omega"}, {"count", art.omega.size()}},
        {{"name", "b"}, {"count", art.b.size()}},
        {{"name", "bc_values"}, {"count", art.bc_values.size()}},
        {{"name", "Dbc"}, {"count", static_cast<long>(dbc_trip.size())}},
    };
    const std::string header_text = header.dump();

    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw DataError("cannot write " + path);
    write_raw(f.get(), kMagic, sizeof(kMagic), path);
    const std::uint64_t hlen = header_text.size();
    write_raw(f.get(), &hlen, sizeof(hlen), path);
    write_raw(f.get(), header_text.data(), header_text.size(), path);

    write_section(f.get(), d_trip.data(), static_cast<long>(d_trip.size()), path);

    // Dense matrices are stored row-major.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dpsi = art.DPsi;
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> psi = art.Psi;
    write_section(f.get(), dpsi.data(), dpsi.size(), path);
    write_section(f.get(), psi.data(), psi.size(), path);
    write_section(f.get(), art.PsiTb.data(), art.PsiTb.size(), path);
    write_section(f.get(), art.row_norms.data(), art.row_norms.size(), path);
    write_section(f.get(), art.omega.data(), art.omega.size(), path);
    write_section(f.get(), art.b.data(), art.b.size(), path);
    write_section(f.get(), art.bc_values.data(), art.bc_values.size(), path);
    write_section(f.get(), dbc_trip.data(), static_cast<long>(dbc_trip.size()), path);
}

OfflineArtifact load_artifact(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw DataError("cannot open " + path);

    char magic[6];
    read_raw(f.get(), magic, sizeof(magic), path);
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError(path + " is not an SKFEM1 artifact");
    std::uint64_t hlen = 0;
    read_raw(f.get(), &hlen, sizeof(hlen), path);
    std::string header_text(hlen, '\0');
    read_raw(f.get(), header_text.data(), hlen, path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": bad artifact header: " + e.what());
    }
    if (header.value("endianness", "little") != std::string("little"))
        throw DataError(path + ": unsupported endianness");

    OfflineArtifact art;
    art.dim = header.at("dim").get<int>();
    art.k = header.at("k").get<int>();
    art.n_nodes = header.at("n_nodes").get<int>();
    art.n_dof = header.at("n_dof").get<int>();
    art.rho = header.at("rho").get<int>();
    art.problem = header.at("problem").get<std::string>() == "neumann" ? ProblemKind::neumann
                                                                       : ProblemKind::dirichlet;
    art.fingerprint = parse_hex64(header.at("fingerprint").get<std::string>());
    art.data_hash = parse_hex64(header.at("data_hash").get<std::string>());
    art.strict_norm_ordering = header.value("strict_norm_ordering", true);
    art.version = header.value("version", "unknown");

    const auto evs = header.at("eigenvalues").get<std::vector<double>>();
    art.eigenvalues = Eigen::Map<const Eigen::VectorXd>(evs.data(), static_cast<long>(evs.size()));

    auto section_count = [&](const char* name) -> long {
        for (const auto& s : header.at("sections"))
            if (s.at("name").get<std::string>() == name) return s.at("count").get<long>();
        throw DataError(path + ": missing section " + name);
    };
    auto read_vec = [&](long count) {
        std::vector<double> v(static_cast<size_t>(count));
        read_raw(f.get(), v.data(), sizeof(double) * v.size(), path);
        return v;
    };

    const long kd = art.kd();
    const std::vector<double> d_trip = read_vec(section_count("D"));
    const std::vector<double> dpsi = read_vec(section_count("DPsi"));
    const std::vector<double> psi = read_vec(section_count("Psi"));
    const std::vector<double> psitb = read_vec(section_count("PsiTb"));
    const std::vector<double> row_norms = read_vec(section_count("row_norms"));
    const std::vector<double> omega = read_vec(section_count("omega"));
    const std::vector<double> b = read_vec(section_count("b"));
    const std::vector<double> bc = read_vec(section_count("bc_values"));
    const std::vector<double> dbc_trip = read_vec(section_count("Dbc"));

    if (static_cast<long>(dpsi.size()) != kd * art.rho ||
        static_cast<long>(psi.size()) != static_cast<long>(art.n_dof) * art.rho)
        throw DataError(path + ": section sizes disagree with header dimensions");

    using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    art.DPsi = Eigen::Map<const RowMajorMat>(dpsi.data(), kd, art.rho);
    art.Psi = Eigen::Map<const RowMajorMat>(psi.data(), art.n_dof, art.rho);
    art.PsiTb = Eigen::Map<const Eigen::VectorXd>(psitb.data(), static_cast<long>(psitb.size()));
    art.row_norms =
        Eigen::Map<const Eigen::VectorXd>(row_norms.data(), static_cast<long>(row_norms.size()));
    art.omega = Eigen::Map<const Eigen::VectorXd>(omega.data(), static_cast<long>(omega.size()));
    art.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<long>(b.size()));
    art.bc_values = Eigen::Map<const Eigen::VectorXd>(bc.data(), static_cast<long>(bc.size()));

    GradientFactor& g = art.gradients;
    g.dim = art.dim;
    g.k = art.k;
    g.fingerprint = art.fingerprint;
    g.dof.column = header.at("dof_map").get<std::vector<int>>();
    g.dof.pinned_node = header.at("pinned_node").get<int>();
    g.dof.free_nodes.assign(art.n_dof, -1);
    for (int node = 0; node < art.n_nodes; ++node) {
        const int col = g.dof.column[node];
        if (col >= 0) {
            if (col >= art.n_dof) throw DataError(path + ": dof map column out of range");
            g.dof.free_nodes[col] = node;
        } else {
            g.dof.eliminated_nodes.push_back(node);
        }
    }
    g.D = triplets_to_sparse(d_trip, kd, art.n_dof);
    g.Dbc = triplets_to_sparse(dbc_trip, kd, static_cast<long>(g.dof.eliminated_nodes.size()));

    for (int col = 0; col < art.n_dof; ++col)
        if (g.dof.free_nodes[col] < 0)
            throw DataError(path + ": dof map disagrees with header dimensions");
    return art;
}

} // namespace sketchfem
