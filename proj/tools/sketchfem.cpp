// Command-line front end: mesh generation, offline precompute, batch solve,
// benchmark harness and sampling-distribution probes.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "sketchfem/cli.hpp"
#include "sketchfem/errors.hpp"
#include "sketchfem/version.hpp"

int main(int argc, char** argv) {
    using namespace sketchfem;

    CLI::App app{"sketchfem: randomized many-query elliptic FEM solver"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    GenerateConfig gen;
    auto* cgen = app.add_subcommand("generate", "write a structured mesh as .node/.ele/.face");
    cgen->add_option("--dim", gen.dim, "spatial dimension (2 or 3)");
    cgen->add_option("--m", gen.m, "subdivisions per axis");
    cgen->add_option("--bc", gen.bc, "boundary tagging: dirichlet | neumann | mixed");
    cgen->add_option("--out", gen.out, "output path prefix")->required();

    PrecomputeConfig pre;
    auto* cpre = app.add_subcommand("precompute", "build and persist the offline artifact");
    cpre->add_option("--mesh", pre.mesh, "mesh path prefix (.node/.ele/.face)")->required();
    cpre->add_option("--problem", pre.problem, "dirichlet | neumann");
    cpre->add_option("--rho", pre.rho, "projection subspace dimension");
    cpre->add_option("--data", pre.data, "problem-data JSON (forcing/neumann/dirichlet)");
    cpre->add_option("--out", pre.out, "artifact output path")->required();

    SolveConfig sol;
    auto* csol = app.add_subcommand("solve", "sketched solves for a batch of parameter queries");
    csol->add_option("--artifact", sol.artifact, "offline artifact path")->required();
    csol->add_option("--queries", sol.queries, "CSV with one row of k values per query")->required();
    csol->add_option("--samples", sol.samples, "sample budget c");
    csol->add_option("--seed", sol.seed, "base RNG seed");
    csol->add_option("--dist-mode", sol.dist_mode, "prop33 | alg1");
    csol->add_flag("--exact", sol.exact, "also solve exactly and report the error breakdown");
    csol->add_flag("--exact-gram", sol.exact_gram, "use the exact projected Gram (no sketching)");
    csol->add_option("--out", sol.out, "output directory")->required();

    BenchConfig ben;
    auto* cben = app.add_subcommand("bench", "many-query benchmark over sample budgets");
    cben->add_option("--artifact", ben.artifact, "offline artifact path")->required();
    cben->add_option("--samples", ben.samples, "sample budgets, one test row each");
    cben->add_option("--n-queries", ben.n_queries, "queries per test row");
    cben->add_option("--seed", ben.seed, "base RNG seed");
    cben->add_option("--sampler", ben.sampler, "parameter sampler: uniform:a:b | expneg:a:b");
    cben->add_option("--dist-mode", ben.dist_mode, "prop33 | alg1");
    cben->add_option("--epsilon", ben.epsilon, "accuracy target in (0,1)");
    cben->add_option("--delta", ben.delta, "failure probability in (0,1)");
    cben->add_option("--out", ben.out, "output path prefix")->required();

    ProbeConfig pro;
    auto* cpro = app.add_subcommand("probe", "leverage vs row-norm distribution distance sweep");
    cpro->add_option("--artifact", pro.artifact, "offline artifact path")->required();
    cpro->add_option("--rhos", pro.rhos, "subspace sizes to probe (default: automatic sweep)");
    cpro->add_option("--draws", pro.draws, "parameter draws averaged per rho");
    cpro->add_option("--seed", pro.seed, "base RNG seed");
    cpro->add_option("--sampler", pro.sampler, "parameter sampler spec");
    cpro->add_option("--out", pro.out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cgen->parsed()) return cmd_generate(gen);
        if (cpre->parsed()) return cmd_precompute(pre);
        if (csol->parsed()) return cmd_solve(sol);
        if (cben->parsed()) return cmd_bench(ben);
        if (cpro->parsed()) return cmd_probe(pro);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    }
    return 2;
}
