#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sketchfem/analysis.hpp"
#include "sketchfem/artifact.hpp"
#include "sketchfem/sketch.hpp"

namespace sketchfem {

struct SolveOptions {
    long c = 1000;
    std::uint64_t seed = 0;
    DistMode mode = DistMode::prop33;
    bool exact_gram = false; // feed G instead of Ghat (no sketching error)
};

struct QueryOutcome {
    bool ok = false;
    std::string error;       // set when !ok, run continues
    SketchedSolution sol;
    double gram_rel_err = -1; // ||Ghat - G||_F/||G||_F when diagnostics ran
    double kappa_G = -1;
    std::optional<ErrorBreakdown> breakdown; // with exact-solve diagnostics
    std::int64_t exact_solve_ns = -1;
};

// One sketched solve for one parameter query; the per-query RNG stream is
// keyed by (seed, query_index).
QueryOutcome solve_query(const OfflineArtifact& art, const ParameterQuery& q,
                         const SolveOptions& opts, std::uint64_t query_index);

// Adds exact-solve diagnostics (error decomposition against u* = A^{-1} b).
QueryOutcome solve_query_diagnosed(const OfflineArtifact& art, const ParameterQuery& q,
                                   const Eigen::VectorXd& b, const SolveOptions& opts,
                                   std::uint64_t query_index);

// Parameter samplers used by bench/probe: "uniform:a:b" draws U[a,b],
// "expneg:a:b" draws exp(-U[a,b]).
struct ParamSampler {
    enum class Kind { uniform, expneg } kind = Kind::uniform;
    double a = 0.1;
    double b = 100.0;

    static ParamSampler parse(const std::string& spec);
    std::string str() const;
    Eigen::VectorXd sample(int k, std::uint64_t seed, std::uint64_t stream) const;
};

} // namespace sketchfem
