#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace sketchfem {

// Command configurations. Every output file embeds the originating config
// (as JSON) and the version string; reruns with equal configs and seeds
// produce byte-identical CSV outputs.

struct GenerateConfig {
    int dim = 2;
    int m = 4;
    std::string bc = "dirichlet"; // dirichlet | neumann | mixed
    std::string out;              // path prefix
    nlohmann::json to_json() const;
};

struct PrecomputeConfig {
    std::string mesh;    // path prefix of .node/.ele/.face
    std::string problem = "dirichlet";
    int rho = 10;
    std::string data;    // problem-data JSON path, empty = zero data
    std::string out;     // artifact path
    nlohmann::json to_json() const;
};

struct SolveConfig {
    std::string artifact;
    std::string queries; // CSV, one row of k positive values per query
    long samples = 1000;
    std::uint64_t seed = 0;
    std::string dist_mode = "prop33"; // prop33 | alg1
    bool exact = false;               // exact-solve diagnostics
    bool exact_gram = false;          // no sketching, use G
    std::string out;                  // output directory
    nlohmann::json to_json() const;
};

struct BenchConfig {
    std::string artifact;
    std::vector<long> samples{1000, 10000, 100000};
    int n_queries = 100;
    std::uint64_t seed = 0;
    std::string sampler = "uniform:0.1:100"; // uniform:a:b | expneg:a:b
    std::string dist_mode = "prop33";
    double epsilon = 0.5;
    double delta = 0.2;
    std::string out; // path prefix
    nlohmann::json to_json() const;
};

struct ProbeConfig {
    std::string artifact;
    std::vector<int> rhos;      // empty = automatic sweep
    int draws = 5;              // parameter draws averaged per rho
    std::uint64_t seed = 0;
    std::string sampler = "uniform:0.01:1";
    std::string out;            // CSV path
    nlohmann::json to_json() const;
};

int cmd_generate(const GenerateConfig& cfg);
int cmd_precompute(const PrecomputeConfig& cfg);
int cmd_solve(const SolveConfig& cfg);
int cmd_bench(const BenchConfig& cfg);
int cmd_probe(const ProbeConfig& cfg);

} // namespace sketchfem
