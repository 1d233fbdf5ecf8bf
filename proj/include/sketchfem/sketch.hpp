#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "sketchfem/artifact.hpp"

namespace sketchfem {

// Row-sampling probabilities over the k*d rows of X = Z^{1/2} D Psi.
//   prop33: xi ~ z * ||(D Psi)_row||^2  (variance-optimal, the default)
//   alg1:   xi ~ sqrt(z) * ||(D Psi)_row||  (alternative mode for comparison)
enum class DistMode { prop33, alg1 };

struct SamplingDistribution {
    Eigen::VectorXd xi;  // sums to 1
    Eigen::VectorXd cdf; // cdf[last] == 1 exactly
    long size() const { return xi.size(); }
};

SamplingDistribution sampling_distribution(const Scaling& s,
                                           const Eigen::VectorXd& row_norms,
                                           int dim, DistMode mode = DistMode::prop33);

struct SketchPlan {
    long c = 0;
    std::uint64_t seed = 0;
    std::vector<std::int32_t> indices; // c iid draws, with replacement
};

// Inverse-CDF draws on a counter-based stream: identical (dist, c, seed)
// give identical indices regardless of platform or worker count.
SketchPlan draw(const SamplingDistribution& dist, long c, std::uint64_t seed);

struct SketchedGram {
    Eigen::MatrixXd Ghat; // rho x rho, symmetric PSD by construction
    long c = 0;
    std::uint64_t seed = 0;
    long distinct_rows = 0; // rows of X touched by the plan
};

// Ghat = (1/c) sum_t (z_{r_t}/xi_{r_t}) (DPsi)_{r_t}^T (DPsi)_{r_t},
// aggregated per distinct row, blockwise-parallel with a fixed fold order.
SketchedGram sketch_gram(const OfflineArtifact& art, const Scaling& s,
                         const SketchPlan& plan, const SamplingDistribution& dist);

// Straight serial accumulation, kept as the reference for tests/benchmarks.
SketchedGram sketch_gram_reference(const OfflineArtifact& art, const Scaling& s,
                                   const SketchPlan& plan, const SamplingDistribution& dist);

// G = X^T X accumulated over all rows (equals Psi^T A Psi).
Eigen::MatrixXd exact_gram(const OfflineArtifact& art, const Scaling& s);
Eigen::MatrixXd exact_gram_reference(const OfflineArtifact& art, const Scaling& s);

struct StageTimings {
    std::int64_t distribution_ns = 0;
    std::int64_t sampling_ns = 0;
    std::int64_t gram_ns = 0;
    std::int64_t solve_ns = 0;
    std::int64_t reconstruct_ns = 0;
    std::int64_t total() const {
        return distribution_ns + sampling_ns + gram_ns + solve_ns + reconstruct_ns;
    }
};

struct SketchedSolution {
    Eigen::VectorXd r_hat; // rho
    Eigen::VectorXd u_hat; // n_dof, = Psi r_hat
    StageTimings timings;
    long c = 0;                // sample budget behind the solution
    std::uint64_t seed = 0;    // stream seed that produced the plan
    double distinct_ratio = 0; // distinct sampled rows / (k*d)
};

// Solves Ghat r = Psi^T b by symmetric factorization; throws
// InsufficientSamplesError when the smallest eigenvalue of Ghat falls below
// 1e-12 ||Ghat||.
SketchedSolution solve_sketched(const SketchedGram& gram, const Eigen::VectorXd& PsiTb,
                                const Eigen::MatrixXd& Psi);

} // namespace sketchfem
