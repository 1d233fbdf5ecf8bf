#include "sketchfem/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "sketchfem/analysis.hpp"
#include "sketchfem/artifact.hpp"
#include "sketchfem/data_spec.hpp"
#include "sketchfem/errors.hpp"
#include "sketchfem/parallel.hpp"
#include "sketchfem/pipeline.hpp"
#include "sketchfem/version.hpp"

namespace sketchfem {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvWriter {
    CsvWriter(const std::string& path, const nlohmann::json& config) : path_(path), out_(path) {
        if (!out_) throw DataError("cannot write " + path);
        out_ << "# version: " << version_string() << "\n";
        out_ << "# config: " << config.dump() << "\n";
    }
    void header(const std::vector<std::string>& cols) { line(cols); }
    void line(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }
    std::string path_;
    std::ofstream out_;
};

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

struct Histogram {
    double lo = 0, hi = 0;
    std::vector<long> counts;
};

Histogram histogram(const std::vector<double>& values, int bins = 30) {
    Histogram h;
    if (values.empty()) {
        h.counts.assign(1, 0);
        return h;
    }
    h.lo = *std::min_element(values.begin(), values.end());
    h.hi = *std::max_element(values.begin(), values.end());
    if (!(h.hi > h.lo)) {
        h.counts.assign(1, static_cast<long>(values.size()));
        return h;
    }
    h.counts.assign(static_cast<size_t>(bins), 0);
    for (const double v : values) {
        int b = static_cast<int>((v - h.lo) / (h.hi - h.lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<size_t>(b)];
    }
    return h;
}

void write_histogram(const std::string& path, const nlohmann::json& config,
                     const Histogram& h) {
    CsvWriter csv(path, config);
    csv.header({"bin_lo", "bin_hi", "count"});
    const int bins = static_cast<int>(h.counts.size());
    const double width = bins > 0 && h.hi > h.lo ? (h.hi - h.lo) / bins : 0.0;
    for (int b = 0; b < bins; ++b)
        csv.line({num(h.lo + b * width), num(width > 0 ? h.lo + (b + 1) * width : h.hi),
                  std::to_string(h.counts[static_cast<size_t>(b)])});
}

BcLayout parse_bc(const std::string& bc) {
    if (bc == "dirichlet") return BcLayout::all_dirichlet;
    if (bc == "neumann") return BcLayout::all_neumann;
    if (bc == "mixed") return BcLayout::mixed;
    throw UsageError("bc must be dirichlet, neumann or mixed, got '" + bc + "'");
}

ProblemKind parse_problem(const std::string& p) {
    if (p == "dirichlet") return ProblemKind::dirichlet;
    if (p == "neumann") return ProblemKind::neumann;
    throw UsageError("problem must be dirichlet or neumann, got '" + p + "'");
}

DistMode parse_dist_mode(const std::string& m) {
    if (m == "prop33") return DistMode::prop33;
    if (m == "alg1") return DistMode::alg1;
    throw UsageError("dist-mode must be prop33 or alg1, got '" + m + "'");
}

std::vector<Eigen::VectorXd> read_query_csv(const std::string& path, int k) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open query file " + path);
    std::vector<Eigen::VectorXd> queries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos || line[pos] == '#') continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (static_cast<int>(vals.size()) != k)
            throw DataError(path + ":" + std::to_string(lineno) + ": query row " +
                            std::to_string(queries.size()) + " has " +
                            std::to_string(vals.size()) + " values, expected k = " +
                            std::to_string(k));
        queries.push_back(Eigen::Map<Eigen::VectorXd>(vals.data(), k));
    }
    if (queries.empty()) throw DataError(path + ": no queries found");
    return queries;
}

nlohmann::json timings_json(const StageTimings& t) {
    return {{"distribution_ns", t.distribution_ns}, {"sampling_ns", t.sampling_ns},
            {"gram_ns", t.gram_ns},                 {"solve_ns", t.solve_ns},
            {"reconstruct_ns", t.reconstruct_ns},   {"total_ns", t.total()}};
}

nlohmann::json breakdown_json(const ErrorBreakdown& e) {
    return {{"projection", e.projection},
            {"subspace", e.subspace},
            {"simulation", e.simulation},
            {"total", e.total},
            {"projection_rel", e.projection_rel},
            {"subspace_rel", e.subspace_rel},
            {"simulation_rel", e.simulation_rel},
            {"total_rel", e.total_rel},
            {"r_rel", e.r_rel},
            {"kappa_G", e.kappa_G},
            {"lambda_max_A", e.lambda_max_A},
            {"lambda_min_A", e.lambda_min_A},
            {"lambda_min_G", e.lambda_min_G},
            {"lambda_max_G", e.lambda_max_G},
            {"epsilon_realized", e.epsilon_realized},
            {"total_bound", e.total_bound},
            {"total_bound_best", e.total_bound_best},
            {"total_bound_worst", e.total_bound_worst},
            {"subspace_bound", e.subspace_bound},
            {"subspace_bound_ok", e.subspace_bound_ok},
            {"psi_r_norm", e.psi_r_norm},
            {"psi_r_bound", e.psi_r_bound}};
}

double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

nlohmann::json GenerateConfig::to_json() const {
    return {{"command", "generate"}, {"dim", dim}, {"m", m}, {"bc", bc}, {"out", out}};
}

nlohmann::json PrecomputeConfig::to_json() const {
    return {{"command", "precompute"}, {"mesh", mesh}, {"problem", problem},
            {"rho", rho},              {"data", data}, {"out", out}};
}

nlohmann::json SolveConfig::to_json() const {
    return {{"command", "solve"},   {"artifact", artifact},   {"queries", queries},
            {"samples", samples},   {"seed", seed},           {"dist_mode", dist_mode},
            {"exact", exact},       {"exact_gram", exact_gram}, {"out", out}};
}

nlohmann::json BenchConfig::to_json() const {
    return {{"command", "bench"}, {"artifact", artifact}, {"samples", samples},
            {"n_queries", n_queries}, {"seed", seed},     {"sampler", sampler},
            {"dist_mode", dist_mode}, {"epsilon", epsilon}, {"delta", delta},
            {"out", out}};
}

nlohmann::json ProbeConfig::to_json() const {
    return {{"command", "probe"}, {"artifact", artifact}, {"rhos", rhos},
            {"draws", draws},     {"seed", seed},         {"sampler", sampler},
            {"out", out}};
}

int cmd_generate(const GenerateConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("--out prefix is required");
    const Mesh mesh = generate_structured(cfg.dim, cfg.m, parse_bc(cfg.bc));
    validate(mesh);
    write_mesh(mesh, cfg.out);

    // Prepend provenance comments; the loader skips '#' lines.
    const std::string stamp =
        "# version: " + version_string() + "\n# config: " + cfg.to_json().dump() + "\n";
    for (const char* ext : {".node", ".ele", ".face"}) {
        const std::string path = cfg.out + ext;
        std::ifstream in(path, std::ios::binary);
        const std::string body((std::istreambuf_iterator<char>(in)), {});
        in.close();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << stamp << body;
    }
    std::printf("wrote %s.{node,ele,face}: dim=%d nodes=%d elements=%d facets=%d\n",
                cfg.out.c_str(), mesh.dim, mesh.num_nodes(), mesh.num_elements(),
                mesh.num_facets());
    return 0;
}

int cmd_precompute(const PrecomputeConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("--out path is required");
    const Mesh mesh = load_mesh(cfg.mesh + ".node", cfg.mesh + ".ele", cfg.mesh + ".face");
    const ProblemKind problem = parse_problem(cfg.problem);
    const GradientFactor g = shape_gradients(mesh, problem);
    if (cfg.rho < 1 || cfg.rho > g.n_dof())
        throw UsageError("rho = " + std::to_string(cfg.rho) + " outside [1, n_dof = " +
                         std::to_string(g.n_dof()) + "]");

    const ElementVolumes vols = element_volumes(mesh);
    const SparseColMajor delta = laplacian(g);
    const Basis basis = smallest_eigvecs(delta, cfg.rho);

    ProblemData data;
    if (!cfg.data.empty()) data = load_problem_data(cfg.data);
    const Eigen::VectorXd gD = dirichlet_at_nodes(mesh, data.dirichlet);
    // The persisted load vector uses the nominal parameter p = 1, keeping the
    // bundle parameter-independent; nonzero Dirichlet data is lifted with it.
    const Scaling nominal{vols.omega};
    const LoadVector load = assemble_load(mesh, forcing_at_centroids(mesh, data.forcing),
                                          neumann_at_facets(mesh, data.neumann), gD, g, nominal);

    OfflineArtifact art =
        precompute(mesh, g, vols, basis, load.b, data_spec_hash(data), gD);
    save_artifact(art, cfg.out);

    // Nodes on both boundary parts are classified Dirichlet (eliminated);
    // report how many corner nodes the rule decided.
    if (problem == ProblemKind::dirichlet) {
        std::vector<bool> on_neumann(mesh.num_nodes(), false);
        for (const auto& facet : mesh.boundary_facets)
            if (facet.tag == FacetTag::neumann)
                for (int v = 0; v < mesh.dim; ++v) on_neumann[facet.nodes[v]] = true;
        int corners = 0;
        for (const int node : g.dof.eliminated_nodes)
            if (on_neumann[node]) ++corners;
        if (corners > 0)
            std::printf("mixed-boundary corners: %d node(s) on both parts eliminated as "
                        "Dirichlet (any-incident-facet rule)\n",
                        corners);
    }

    std::printf("eigenvalues: [%.6g, %.6g], max residual %.3g\n", basis.eigenvalues[0],
                basis.eigenvalues[cfg.rho - 1], basis.residuals.maxCoeff());
    std::printf("||D Psi|| column ordering %s\n",
                basis.strict_norm_ordering ? "strictly increasing"
                                           : "non-strict (repeated eigenvalue cluster)");
    std::printf("wrote %s: n_dof=%d rho=%d kd=%ld\n", cfg.out.c_str(), art.n_dof, art.rho,
                art.kd());
    return 0;
}

int cmd_solve(const SolveConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("--out directory is required");
    const OfflineArtifact art = load_artifact(cfg.artifact);
    const std::vector<Eigen::VectorXd> queries = read_query_csv(cfg.queries, art.k);

    SolveOptions opts;
    opts.c = cfg.samples;
    opts.seed = cfg.seed;
    opts.mode = parse_dist_mode(cfg.dist_mode);
    opts.exact_gram = cfg.exact_gram;

    fs::create_directories(cfg.out);
    const nlohmann::json config = cfg.to_json();

    const int n = static_cast<int>(queries.size());
    std::vector<QueryOutcome> outcomes(static_cast<size_t>(n));
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(thread_cap())
    for (int i = 0; i < n; ++i) {
        try {
            const ParameterQuery q{queries[static_cast<size_t>(i)]};
            outcomes[static_cast<size_t>(i)] =
                cfg.exact ? solve_query_diagnosed(art, q, art.b, opts, static_cast<std::uint64_t>(i))
                          : solve_query(art, q, opts, static_cast<std::uint64_t>(i));
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    int failures = 0;
    for (int i = 0; i < n; ++i) {
        const auto& res = outcomes[static_cast<size_t>(i)];
        char tag[16];
        std::snprintf(tag, sizeof(tag), "%04d", i);

        nlohmann::json j;
        j["version"] = version_string();
        j["config"] = config;
        j["query_index"] = i;
        j["ok"] = res.ok;
        if (!res.ok) {
            j["error"] = res.error;
            ++failures;
        } else {
            j["timings"] = timings_json(res.sol.timings);
            j["distinct_ratio"] = res.sol.distinct_ratio;
            j["samples"] = res.sol.c;
            j["stream_seed"] = res.sol.seed;
            if (res.gram_rel_err >= 0) j["gram_rel_err"] = res.gram_rel_err;
            if (res.breakdown) j["errors"] = breakdown_json(*res.breakdown);
            if (res.exact_solve_ns >= 0) j["exact_solve_ns"] = res.exact_solve_ns;

            CsvWriter u_csv(cfg.out + "/u_" + tag + ".csv", config);
            u_csv.header({"node", "value"});
            const Eigen::VectorXd full = art.to_nodal_field(res.sol.u_hat);
            for (long row = 0; row < full.size(); ++row)
                u_csv.line({std::to_string(row), num(full[row])});
        }
        write_json(cfg.out + "/query_" + tag + ".json", j);
    }
    std::printf("solved %d queries (%d failed) -> %s\n", n, failures, cfg.out.c_str());
    return 0;
}

int cmd_bench(const BenchConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("--out prefix is required");
    const OfflineArtifact art = load_artifact(cfg.artifact);
    const ParamSampler sampler = ParamSampler::parse(cfg.sampler);
    if (cfg.n_queries < 1) throw UsageError("n-queries must be >= 1");

    const nlohmann::json config = cfg.to_json();
    CsvWriter table(cfg.out + "_bench.csv", config);
    table.out_ << "# ratio = distinct sampled rows / (k*d); wall-clock columns live in "
                  "the _timing.json sidecar\n";
    table.header({"test", "rho", "c", "ratio", "proj_rel", "gram_rel", "kappa_G", "r_rel",
                  "total_rel"});

    nlohmann::json timing;
    timing["version"] = version_string();
    timing["config"] = config;

    // Sample-budget suggestion for the accuracy target, evaluated at the
    // nominal parameter p = 1.
    {
        const Scaling nominal{art.omega};
        const Eigen::MatrixXd G = exact_gram(art, nominal);
        const SampleBudget budget = sample_budget(cfg.epsilon, cfg.delta, nominal, art, G);
        timing["budget_nominal"] = {{"epsilon", cfg.epsilon},
                                    {"delta", cfg.delta},
                                    {"c_min", budget.c_min},
                                    {"numerator", budget.numerator},
                                    {"lambda_min_G", budget.lambda_min_G},
                                    {"kappa_G", budget.kappa_G},
                                    {"degenerate", budget.degenerate}};
    }

    SolveOptions opts;
    opts.seed = cfg.seed;
    opts.mode = parse_dist_mode(cfg.dist_mode);

    for (size_t ci = 0; ci < cfg.samples.size(); ++ci) {
        opts.c = cfg.samples[ci];
        const std::string label(1, static_cast<char>('A' + (ci % 26)));

        const int n = cfg.n_queries;
        std::vector<QueryOutcome> outcomes(static_cast<size_t>(n));
        std::exception_ptr failure;
        const auto wall0 = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic) num_threads(thread_cap())
        for (int i = 0; i < n; ++i) {
            try {
                const ParameterQuery q{sampler.sample(art.k, cfg.seed, static_cast<std::uint64_t>(i))};
                outcomes[static_cast<size_t>(i)] =
                    solve_query_diagnosed(art, q, art.b, opts, static_cast<std::uint64_t>(i));
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        const double wall_s = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - wall0)
                                  .count();

        std::vector<double> ratio, proj, gram, kappa, r_rel, total, sketch_ns, exact_ns;
        std::vector<double> hist_proj, hist_sub, hist_sim, hist_total, hist_kappa;
        int failed = 0;
        for (const auto& res : outcomes) {
            if (!res.ok || !res.breakdown) {
                ++failed;
                continue;
            }
            const auto& e = *res.breakdown;
            ratio.push_back(res.sol.distinct_ratio);
            proj.push_back(e.projection_rel);
            gram.push_back(res.gram_rel_err);
            kappa.push_back(e.kappa_G);
            r_rel.push_back(e.r_rel);
            total.push_back(e.total_rel);
            sketch_ns.push_back(static_cast<double>(res.sol.timings.total()));
            exact_ns.push_back(static_cast<double>(res.exact_solve_ns));
            hist_proj.push_back(e.projection_rel);
            hist_sub.push_back(e.subspace_rel);
            hist_sim.push_back(e.simulation_rel);
            hist_total.push_back(e.total_rel);
            hist_kappa.push_back(e.kappa_G);
        }

        table.line({label, std::to_string(art.rho), std::to_string(opts.c), num(mean(ratio)),
                    num(mean(proj)), num(mean(gram)), num(mean(kappa)), num(mean(r_rel)),
                    num(mean(total))});

        // Wall-clock measurements live in the JSON sidecar so the CSV data
        // products stay byte-identical across reruns.
        timing["tests"][label] = {
            {"c", opts.c},
            {"queries", n},
            {"failed", failed},
            {"wall_s", wall_s},
            {"sketch_ns_mean", mean(sketch_ns)},
            {"sketch_ns_median", median(sketch_ns)},
            {"exact_ns_mean", mean(exact_ns)},
            {"exact_ns_median", median(exact_ns)},
            {"speedup_median", median(sketch_ns) > 0 ? median(exact_ns) / median(sketch_ns) : 0.0},
        };

        const std::string hp = cfg.out + "_" + label;
        write_histogram(hp + "_hist_projection.csv", config, histogram(hist_proj));
        write_histogram(hp + "_hist_subspace.csv", config, histogram(hist_sub));
        write_histogram(hp + "_hist_simulation.csv", config, histogram(hist_sim));
        write_histogram(hp + "_hist_total.csv", config, histogram(hist_total));
        write_histogram(hp + "_hist_kappa.csv", config, histogram(hist_kappa));
    }

    write_json(cfg.out + "_timing.json", timing);
    std::printf("bench complete -> %s_bench.csv\n", cfg.out.c_str());
    return 0;
}

int cmd_probe(const ProbeConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("--out path is required");
    const OfflineArtifact art = load_artifact(cfg.artifact);
    const ParamSampler sampler = ParamSampler::parse(cfg.sampler);
    if (cfg.draws < 1) throw UsageError("draws must be >= 1");

    std::vector<int> rhos = cfg.rhos;
    if (rhos.empty()) {
        rhos.push_back(1);
        for (int r = 5; r <= art.rho; r += 5) rhos.push_back(r);
        if (rhos.back() != art.rho) rhos.push_back(art.rho);
    }
    for (const int r : rhos)
        if (r < 1 || r > art.rho)
            throw UsageError("probe rho " + std::to_string(r) + " outside [1, " +
                             std::to_string(art.rho) + "]");

    const nlohmann::json config = cfg.to_json();
    CsvWriter csv(cfg.out, config);
    csv.header({"rho", "dist_X_2", "dist_X_max", "dist_Y_2", "dist_Y_max", "bound_X_2",
                "bound_X_max", "bound_Y_2", "bound_Y_max", "raw_gap_X", "raw_gap_Y"});

    // Per-draw quantities for Y do not depend on rho; compute them once.
    struct DrawData {
        Scaling s;
        double dist_Y_2, dist_Y_max, bound_Y_2, bound_Y_max, y_trace_gap;
        Eigen::MatrixXd X_full; // scaled D Psi at the artifact's full rho
    };
    std::vector<DrawData> draws;
    const Eigen::MatrixXd D_dense(art.gradients.D);
    for (int dr = 0; dr < cfg.draws; ++dr) {
        DrawData dd;
        const ParameterQuery q{sampler.sample(art.k, cfg.seed, static_cast<std::uint64_t>(dr))};
        dd.s = assemble_scaling(q, ElementVolumes{art.omega});

        Eigen::MatrixXd Y = D_dense;
        for (long row = 0; row < Y.rows(); ++row)
            Y.row(row) *= std::sqrt(dd.s.row_value(row, art.dim));
        const ScoreSet sc = scores(Y);
        const Eigen::VectorXd diff = sc.xi_leverage - sc.xi_rownorm;
        dd.dist_Y_2 = diff.norm();
        dd.dist_Y_max = diff.cwiseAbs().maxCoeff();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(Y);
        const auto by = inhomogeneous_bounds(svd.singularValues().head(art.n_dof), art.n_dof);
        dd.bound_Y_2 = by.bound.two_norm;
        dd.bound_Y_max = by.bound.max_norm;
        dd.y_trace_gap = std::abs(static_cast<double>(art.n_dof) - Y.squaredNorm()) /
                         static_cast<double>(art.kd());

        dd.X_full = art.DPsi;
        for (long row = 0; row < dd.X_full.rows(); ++row)
            dd.X_full.row(row) *= std::sqrt(dd.s.row_value(row, art.dim));
        draws.push_back(std::move(dd));
    }

    for (const int rho : rhos) {
        double dx2 = 0, dxm = 0, dy2 = 0, dym = 0, bx2 = 0, bxm = 0, by2 = 0, bym = 0;
        double gx = 0, gy = 0;
        for (const auto& dd : draws) {
            const Eigen::MatrixXd X = dd.X_full.leftCols(rho);
            const ScoreSet sc = scores(X);
            const Eigen::VectorXd diff = sc.xi_leverage - sc.xi_rownorm;
            Eigen::BDCSVD<Eigen::MatrixXd> svd(X);
            const auto bx = inhomogeneous_bounds(svd.singularValues().head(rho), rho);
            dx2 += diff.norm();
            dxm += diff.cwiseAbs().maxCoeff();
            bx2 += bx.bound.two_norm;
            bxm += bx.bound.max_norm;
            dy2 += dd.dist_Y_2;
            dym += dd.dist_Y_max;
            by2 += dd.bound_Y_2;
            bym += dd.bound_Y_max;
            const double s1 = svd.singularValues()[0];
            const double sr = svd.singularValues()[rho - 1];
            gx += std::max(std::abs(1.0 - s1 * s1), std::abs(1.0 - sr * sr));
            gy += dd.y_trace_gap;
        }
        const double inv = 1.0 / cfg.draws;
        csv.line({std::to_string(rho), num(dx2 * inv), num(dxm * inv), num(dy2 * inv),
                  num(dym * inv), num(bx2 * inv), num(bxm * inv), num(by2 * inv),
                  num(bym * inv), num(gx * inv), num(gy * inv)});
    }
    std::printf("probe sweep (%zu rhos, %d draws) -> %s\n", rhos.size(), cfg.draws,
                cfg.out.c_str());
    return 0;
}

} // namespace sketchfem
