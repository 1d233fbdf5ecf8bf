#include "sketchfem/sketch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sketchfem/errors.hpp"
#include "sketchfem/parallel.hpp"
#include "sketchfem/rng.hpp"

namespace sketchfem {
namespace {

constexpr std::ptrdiff_t kRowBlock = 512;

std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Per-distinct-row weights: samples aggregated by index first, then one
// rank-1 update per touched row. Returns the number of distinct rows.
long aggregate_counts(const SketchPlan& plan, long kd, std::vector<std::int64_t>& counts) {
    counts.assign(static_cast<size_t>(kd), 0);
    long distinct = 0;
    for (const std::int32_t idx : plan.indices) {
        if (idx < 0 || idx >= kd)
            throw DataError("sample index " + std::to_string(idx) + " outside [0, " +
                            std::to_string(kd) + ")");
        if (counts[static_cast<size_t>(idx)]++ == 0) ++distinct;
    }
    return distinct;
}

} // namespace

SamplingDistribution sampling_distribution(const Scaling& s, const Eigen::VectorXd& row_norms,
                                           int dim, DistMode mode) {
    const long kd = row_norms.size();
    if (kd != static_cast<long>(s.z.size()) * dim)
        throw DataError("row norm cache length does not match k*d");
    for (long e = 0; e < s.z.size(); ++e)
        if (!(s.z[e] > 0))
            throw DataError("admissibility violation: nonpositive scaling at element " +
                            std::to_string(e));

    SamplingDistribution dist;
    dist.xi.resize(kd);
    long double total = 0;
    for (long row = 0; row < kd; ++row) {
        const double z = s.row_value(row, dim);
        const double rn = row_norms[row];
        const double w = mode == DistMode::prop33 ? z * rn * rn : std::sqrt(z) * rn;
        dist.xi[row] = w;
        total += w;
    }
    if (!(total > 0))
        throw DataError("all row norms are zero: cannot build a sampling distribution");

    dist.cdf.resize(kd);
    long double acc = 0;
    const double inv = static_cast<double>(1.0L / total);
    for (long row = 0; row < kd; ++row) {
        dist.xi[row] *= inv;
        acc += dist.xi[row];
        dist.cdf[row] = static_cast<double>(acc);
    }
    dist.cdf[kd - 1] = 1.0;
    return dist;
}

SketchPlan draw(const SamplingDistribution& dist, long c, std::uint64_t seed) {
    if (c < 1) throw UsageError("sample count must be >= 1");
    SketchPlan plan;
    plan.c = c;
    plan.seed = seed;
    plan.indices.resize(static_cast<size_t>(c));

    const CounterRng rng(seed);
    const double* begin = dist.cdf.data();
    const double* end = begin + dist.cdf.size();
#pragma omp parallel for schedule(static) num_threads(thread_cap())
    for (long t = 0; t < c; ++t) {
        const double u = rng.uniform(static_cast<std::uint64_t>(t));
        const double* it = std::upper_bound(begin, end, u);
        plan.indices[static_cast<size_t>(t)] =
            static_cast<std::int32_t>(std::min(it - begin, static_cast<std::ptrdiff_t>(dist.cdf.size() - 1)));
    }
    return plan;
}

SketchedGram sketch_gram(const OfflineArtifact& art, const Scaling& s, const SketchPlan& plan,
                         const SamplingDistribution& dist) {
    const long kd = art.kd();
    const int rho = art.rho;
    if (dist.size() != kd) throw DataError("distribution length does not match k*d");

    std::vector<std::int64_t> counts;
    SketchedGram out;
    out.c = plan.c;
    out.seed = plan.seed;
    out.distinct_rows = aggregate_counts(plan, kd, counts);

    const auto blocks = fixed_blocks(kd, kRowBlock);
    std::vector<Eigen::MatrixXd> partial(blocks.size());
    const double inv_c = 1.0 / static_cast<double>(plan.c);

#pragma omp parallel for schedule(static) num_threads(thread_cap())
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(blocks.size()); ++bi) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rho, rho);
        for (std::ptrdiff_t row = blocks[bi].begin; row < blocks[bi].end; ++row) {
            const std::int64_t cnt = counts[static_cast<size_t>(row)];
            if (cnt == 0) continue;
            const double w =
                static_cast<double>(cnt) * inv_c * s.row_value(row, art.dim) / dist.xi[row];
            acc.selfadjointView<Eigen::Lower>().rankUpdate(art.DPsi.row(row).transpose(), w);
        }
        partial[static_cast<size_t>(bi)] = std::move(acc);
    }

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rho, rho);
    for (const auto& p : partial) G += p; // fixed fold order
    G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
    out.Ghat = std::move(G);
    return out;
}

SketchedGram sketch_gram_reference(const OfflineArtifact& art, const Scaling& s,
                                   const SketchPlan& plan, const SamplingDistribution& dist) {
    const long kd = art.kd();
    const int rho = art.rho;
    std::vector<std::int64_t> counts;
    SketchedGram out;
    out.c = plan.c;
    out.seed = plan.seed;
    out.distinct_rows = aggregate_counts(plan, kd, counts);

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rho, rho);
    for (long row = 0; row < kd; ++row) {
        const std::int64_t cnt = counts[static_cast<size_t>(row)];
        if (cnt == 0) continue;
        const double w = static_cast<double>(cnt) / static_cast<double>(plan.c) *
                         s.row_value(row, art.dim) / dist.xi[row];
        G += w * art.DPsi.row(row).transpose() * art.DPsi.row(row);
    }
    out.Ghat = std::move(G);
    return out;
}

Eigen::MatrixXd exact_gram(const OfflineArtifact& art, const Scaling& s) {
    const long kd = art.kd();
    const int rho = art.rho;
    const auto blocks = fixed_blocks(kd, kRowBlock);
    std::vector<Eigen::MatrixXd> partial(blocks.size());

#pragma omp parallel for schedule(static) num_threads(thread_cap())
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(blocks.size()); ++bi) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rho, rho);
        for (std::ptrdiff_t row = blocks[bi].begin; row < blocks[bi].end; ++row)
            acc.selfadjointView<Eigen::Lower>().rankUpdate(art.DPsi.row(row).transpose(),
                                                           s.row_value(row, art.dim));
        partial[static_cast<size_t>(bi)] = std::move(acc);
    }

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rho, rho);
    for (const auto& p : partial) G += p;
    G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
    return G;
}

Eigen::MatrixXd exact_gram_reference(const OfflineArtifact& art, const Scaling& s) {
    // Independent route: materialize X = Z^{1/2} D Psi and form X^T X.
    Eigen::MatrixXd X = art.DPsi;
    for (long row = 0; row < X.rows(); ++row) X.row(row) *= std::sqrt(s.row_value(row, art.dim));
    return X.transpose() * X;
}

SketchedSolution solve_sketched(const SketchedGram& gram, const Eigen::VectorXd& PsiTb,
                                const Eigen::MatrixXd& Psi) {
    const int rho = static_cast<int>(gram.Ghat.rows());
    if (PsiTb.size() != rho || Psi.cols() != rho)
        throw DataError("projected dimensions disagree");

    SketchedSolution sol;
    const std::int64_t t0 = now_ns();

    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram.Ghat);
    bool healthy = ldlt.info() == Eigen::Success;
    if (healthy) {
        const auto& d = ldlt.vectorD();
        const double dmax = d.maxCoeff();
        healthy = dmax > 0 && d.minCoeff() > 1e-12 * dmax;
    }
    if (healthy) {
        sol.r_hat = ldlt.solve(PsiTb);
    } else {
        // Confirm against the spectrum before rejecting.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.Ghat);
        const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
        const double thresh = 1e-12 * lmax;
        const int rank = static_cast<int>((es.eigenvalues().array() > thresh).count());
        if (rank < rho || !(lmax > 0)) throw InsufficientSamplesError(rank, gram.c, rho);
        sol.r_hat = es.eigenvectors() *
                    (es.eigenvectors().transpose() * PsiTb).cwiseQuotient(es.eigenvalues());
    }
    const std::int64_t t1 = now_ns();
    sol.u_hat = Psi * sol.r_hat;
    const std::int64_t t2 = now_ns();

    sol.timings.solve_ns = t1 - t0;
    sol.timings.reconstruct_ns = t2 - t1;
    sol.c = gram.c;
    sol.seed = gram.seed;
    return sol;
}

} // namespace sketchfem
