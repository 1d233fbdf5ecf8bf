#include "sketchfem/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "sketchfem/errors.hpp"
#include "sketchfem/rng.hpp"

namespace sketchfem {
namespace {

std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

QueryOutcome solve_query(const OfflineArtifact& art, const ParameterQuery& q,
                         const SolveOptions& opts, std::uint64_t query_index) {
    QueryOutcome out;
    try {
        const Scaling s = assemble_scaling(q, ElementVolumes{art.omega});

        const std::int64_t t0 = now_ns();
        const SamplingDistribution dist =
            sampling_distribution(s, art.row_norms, art.dim, opts.mode);
        const std::int64_t t1 = now_ns();

        SketchedGram gram;
        std::int64_t t2 = t1, t3 = t1;
        if (opts.exact_gram) {
            gram.Ghat = exact_gram(art, s);
            gram.c = 0;
            gram.distinct_rows = art.kd();
            t2 = t3 = now_ns();
        } else {
            const std::uint64_t stream_seed =
                CounterRng::keyed(opts.seed, query_index).key();
            const SketchPlan plan = draw(dist, opts.c, stream_seed);
            t2 = now_ns();
            gram = sketch_gram(art, s, plan, dist);
            t3 = now_ns();
        }

        out.sol = solve_sketched(gram, art.PsiTb, art.Psi);
        out.sol.timings.distribution_ns = t1 - t0;
        out.sol.timings.sampling_ns = t2 - t1;
        out.sol.timings.gram_ns = t3 - t2;
        out.sol.distinct_ratio =
            static_cast<double>(gram.distinct_rows) / static_cast<double>(art.kd());
        out.ok = true;
    } catch (const NumericalError& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

QueryOutcome solve_query_diagnosed(const OfflineArtifact& art, const ParameterQuery& q,
                                   const Eigen::VectorXd& b, const SolveOptions& opts,
                                   std::uint64_t query_index) {
    QueryOutcome out = solve_query(art, q, opts, query_index);
    if (!out.ok) return out;

    const Scaling s = assemble_scaling(q, ElementVolumes{art.omega});
    const Eigen::MatrixXd G = exact_gram(art, s);

    // Recover the sketched Gram deviation from the same plan.
    if (!opts.exact_gram) {
        const std::uint64_t stream_seed = CounterRng::keyed(opts.seed, query_index).key();
        const SamplingDistribution dist =
            sampling_distribution(s, art.row_norms, art.dim, opts.mode);
        const SketchPlan plan = draw(dist, opts.c, stream_seed);
        const SketchedGram gram = sketch_gram(art, s, plan, dist);
        out.gram_rel_err = (gram.Ghat - G).norm() / G.norm();
    } else {
        out.gram_rel_err = 0.0;
    }

    // Baseline cost per query: assembly plus factorization plus solve.
    const std::int64_t t0 = now_ns();
    const SparseColMajor A = assemble_stiffness(art.gradients, s);
    const Eigen::VectorXd u_star = exact_solve(A, b);
    out.exact_solve_ns = now_ns() - t0;

    const Eigen::VectorXd r = Eigen::LLT<Eigen::MatrixXd>(G).solve(art.PsiTb);
    out.breakdown = error_breakdown(u_star, art.Psi, r, out.sol.r_hat, A, G);
    out.kappa_G = out.breakdown->kappa_G;
    return out;
}

ParamSampler ParamSampler::parse(const std::string& spec) {
    ParamSampler s;
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw UsageError("sampler spec must be kind:a:b, got '" + spec + "'");
    const std::string kind = spec.substr(0, c1);
    if (kind == "uniform")
        s.kind = Kind::uniform;
    else if (kind == "expneg")
        s.kind = Kind::expneg;
    else
        throw UsageError("unknown sampler kind '" + kind + "'");
    try {
        s.a = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        s.b = std::stod(spec.substr(c2 + 1));
    } catch (const std::exception&) {
        throw UsageError("bad sampler bounds in '" + spec + "'");
    }
    if (!(s.a < s.b)) throw UsageError("sampler bounds must satisfy a < b");
    if (s.kind == Kind::uniform && !(s.a > 0))
        throw UsageError("uniform sampler requires a > 0 for admissibility");
    return s;
}

std::string ParamSampler::str() const {
    return (kind == Kind::uniform ? std::string("uniform:") : std::string("expneg:")) +
           std::to_string(a) + ":" + std::to_string(b);
}

Eigen::VectorXd ParamSampler::sample(int k, std::uint64_t seed, std::uint64_t stream) const {
    const CounterRng rng = CounterRng::keyed(seed, stream);
    Eigen::VectorXd p(k);
    for (int i = 0; i < k; ++i) {
        const double u = rng.uniform(static_cast<std::uint64_t>(i), a, b);
        p[i] = kind == Kind::uniform ? u : std::exp(-u);
    }
    return p;
}

} // namespace sketchfem
