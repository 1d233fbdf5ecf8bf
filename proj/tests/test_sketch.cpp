#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "sketchfem/analysis.hpp"
#include "sketchfem/errors.hpp"
#include "sketchfem/sketch.hpp"

using namespace sketchfem;
using sketchfem::testing::make_fixture;
using sketchfem::testing::random_p;

namespace {

SamplingDistribution uniform_dist(long kd) {
    SamplingDistribution d;
    d.xi = Eigen::VectorXd::Constant(kd, 1.0 / static_cast<double>(kd));
    d.cdf.resize(kd);
    for (long i = 0; i < kd; ++i) d.cdf[i] = static_cast<double>(i + 1) / static_cast<double>(kd);
    d.cdf[kd - 1] = 1.0;
    return d;
}

} // namespace

TEST_CASE("sampling distribution normalizes row-norm weights") {
    Scaling s{Eigen::VectorXd::Ones(3)};
    Eigen::VectorXd norms(3);
    norms << 1, 2, 2;
    const SamplingDistribution d = sampling_distribution(s, norms, /*dim=*/1);
    CHECK(d.xi[0] == doctest::Approx(1.0 / 9.0));
    CHECK(d.xi[1] == doctest::Approx(4.0 / 9.0));
    CHECK(d.xi[2] == doctest::Approx(4.0 / 9.0));
    CHECK(std::abs(d.xi.sum() - 1.0) < 1e-12);
    CHECK(d.cdf[2] == 1.0);
}

TEST_CASE("equal-norm rows give the uniform distribution") {
    Scaling s{Eigen::VectorXd::Ones(4)};
    const SamplingDistribution d =
        sampling_distribution(s, Eigen::VectorXd::Constant(8, 0.7), /*dim=*/2);
    for (long i = 0; i < 8; ++i) CHECK(d.xi[i] == doctest::Approx(0.125));
}

TEST_CASE("scaling the parameter leaves the distribution unchanged") {
    const auto fx = make_fixture(2, 5, BcLayout::all_dirichlet, ProblemKind::dirichlet, 6);
    const Eigen::VectorXd p = random_p(fx.mesh.num_elements(), 0.3, 3.0, 5);
    const Scaling s1 = assemble_scaling({p}, fx.vols);
    const Scaling s2 = assemble_scaling({(2.0 * p).eval()}, fx.vols);
    const SamplingDistribution d1 = sampling_distribution(s1, fx.art.row_norms, fx.art.dim);
    const SamplingDistribution d2 = sampling_distribution(s2, fx.art.row_norms, fx.art.dim);
    CHECK((d1.xi - d2.xi).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("distribution equals the squared row norms of X") {
    const auto fx = make_fixture(2, 5, BcLayout::all_dirichlet, ProblemKind::dirichlet, 6);
    const Eigen::VectorXd p = random_p(fx.mesh.num_elements(), 0.1, 10.0, 9);
    const Scaling s = assemble_scaling({p}, fx.vols);
    const SamplingDistribution d = sampling_distribution(s, fx.art.row_norms, fx.art.dim);

    Eigen::MatrixXd X = fx.art.DPsi;
    for (long row = 0; row < X.rows(); ++row) X.row(row) *= std::sqrt(s.row_value(row, fx.art.dim));
    const Eigen::VectorXd xi_ref = X.rowwise().squaredNorm() / X.squaredNorm();
    CHECK((d.xi - xi_ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("alternative distribution mode uses sqrt(z) times the norm") {
    Scaling s{Eigen::VectorXd::Constant(2, 4.0)};
    Eigen::VectorXd norms(2);
    norms << 1, 3;
    const SamplingDistribution d = sampling_distribution(s, norms, 1, DistMode::alg1);
    CHECK(d.xi[0] == doctest::Approx(2.0 / 8.0));
    CHECK(d.xi[1] == doctest::Approx(6.0 / 8.0));
}

TEST_CASE("all-zero norms are rejected") {
    Scaling s{Eigen::VectorXd::Ones(2)};
    CHECK_THROWS_AS(sampling_distribution(s, Eigen::VectorXd::Zero(2), 1), DataError);
}

TEST_CASE("point mass always draws the same index") {
    SamplingDistribution d;
    d.xi = Eigen::VectorXd::Zero(5);
    d.xi[3] = 1.0;
    d.cdf.resize(5);
    d.cdf << 0, 0, 0, 1, 1;
    const SketchPlan plan = draw(d, 64, 99);
    for (const auto idx : plan.indices) CHECK(idx == 3);
}

TEST_CASE("draws are deterministic in the seed") {
    const SamplingDistribution d = uniform_dist(32);
    const SketchPlan a = draw(d, 1000, 1234);
    const SketchPlan b = draw(d, 1000, 1234);
    const SketchPlan c = draw(d, 1000, 1235);
    CHECK(a.indices == b.indices);
    CHECK(a.indices != c.indices);
}

TEST_CASE("empirical draw frequencies match the distribution") {
    const auto fx = make_fixture(2, 4, BcLayout::all_dirichlet, ProblemKind::dirichlet, 4);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.1, 10.0, 3)}, fx.vols);
    const SamplingDistribution d = sampling_distribution(s, fx.art.row_norms, fx.art.dim);

    const long c = 1000000;
    const SketchPlan plan = draw(d, c, 20240);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(d.size());
    for (const auto idx : plan.indices) counts[idx] += 1;

    for (long i = 0; i < d.size(); ++i) {
        const double freq = counts[i] / static_cast<double>(c);
        const double se = std::sqrt(d.xi[i] * (1 - d.xi[i]) / static_cast<double>(c));
        CHECK(std::abs(freq - d.xi[i]) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("uniform plan covering every row once reproduces G exactly") {
    const auto fx = make_fixture(2, 4, BcLayout::all_dirichlet, ProblemKind::dirichlet, 5);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.5, 2.0, 7)}, fx.vols);
    const long kd = fx.art.kd();

    SketchPlan plan;
    plan.c = kd;
    plan.seed = 0;
    plan.indices.resize(static_cast<size_t>(kd));
    std::iota(plan.indices.begin(), plan.indices.end(), 0);

    const SamplingDistribution d = uniform_dist(kd);
    const SketchedGram sg = sketch_gram(fx.art, s, plan, d);
    const Eigen::MatrixXd G = exact_gram(fx.art, s);
    CHECK((sg.Ghat - G).norm() <= 1e-13 * G.norm());
    CHECK(sg.distinct_rows == kd);
}

TEST_CASE("rho = 1 sketches have zero variance under the optimal weights") {
    const auto fx = make_fixture(2, 4, BcLayout::all_dirichlet, ProblemKind::dirichlet, 1);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.1, 10.0, 11)}, fx.vols);
    const SamplingDistribution d = sampling_distribution(s, fx.art.row_norms, fx.art.dim);
    const Eigen::MatrixXd G = exact_gram(fx.art, s);
    for (const std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const SketchPlan plan = draw(d, 17, seed);
        const SketchedGram sg = sketch_gram(fx.art, s, plan, d);
        CHECK(sg.Ghat(0, 0) == doctest::Approx(G(0, 0)).epsilon(1e-12));
    }
}

TEST_CASE("sketch index outside the row range is rejected") {
    const auto fx = make_fixture(2, 3, BcLayout::all_dirichlet, ProblemKind::dirichlet, 2);
    const SamplingDistribution d = uniform_dist(fx.art.kd());
    SketchPlan plan;
    plan.c = 1;
    plan.indices = {static_cast<std::int32_t>(fx.art.kd())};
    CHECK_THROWS_AS(sketch_gram(fx.art, {fx.vols.omega}, plan, d), DataError);
}

TEST_CASE("sketched Gram is an unbiased estimator") {
    const auto fx = make_fixture(2, 5, BcLayout::all_dirichlet, ProblemKind::dirichlet, 6);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.1, 10.0, 13)}, fx.vols);
    const SamplingDistribution d = sampling_distribution(s, fx.art.row_norms, fx.art.dim);
    const Eigen::MatrixXd G = exact_gram(fx.art, s);

    const long c = 100;
    const int M = 2000;
    const VarianceReport var = variance_report(fx.art, s, d, G, c);

    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(fx.art.rho, fx.art.rho);
    double dev_sq = 0;
    for (int m = 0; m < M; ++m) {
        const SketchedGram sg = sketch_gram(fx.art, s, draw(d, c, 1000 + m), d);
        mean += sg.Ghat;
        dev_sq += (sg.Ghat - G).squaredNorm();
    }
    mean /= M;
    dev_sq /= M;

    // Mean concentrates at G: E||mean - G||_F^2 = E||Ghat - G||_F^2 / M.
    CHECK((mean - G).norm() <= 4.0 * std::sqrt(var.exact / M));
    // The empirical mean-square deviation matches the analytic value.
    CHECK(dev_sq == doctest::Approx(var.exact).epsilon(0.15));
}

TEST_CASE("mean deviation shrinks like the square root of the seed count") {
    const auto fx = make_fixture(2, 4, BcLayout::all_dirichlet, ProblemKind::dirichlet, 4);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.2, 5.0, 15)}, fx.vols);
    const SamplingDistribution d = sampling_distribution(s, fx.art.row_norms, fx.art.dim);
    const Eigen::MatrixXd G = exact_gram(fx.art, s);

    auto mean_dev = [&](int M, std::uint64_t seed0) {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(fx.art.rho, fx.art.rho);
        for (int m = 0; m < M; ++m)
            mean += sketch_gram(fx.art, s, draw(d, 60, seed0 + static_cast<std::uint64_t>(m)), d).Ghat;
        return (mean / M - G).norm();
    };
    const double dev_small = mean_dev(200, 9000);
    const double dev_big = mean_dev(3200, 10000);
    const double ratio = dev_small / dev_big; // ~ sqrt(16) = 4
    CHECK(ratio > 1.5);
    CHECK(ratio < 10.0);
}

TEST_CASE("reweighted sample counts average to one") {
    const auto fx = make_fixture(2, 4, BcLayout::all_dirichlet, ProblemKind::dirichlet, 4);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.5, 5.0, 17)}, fx.vols);
    const SamplingDistribution d = sampling_distribution(s, fx.art.row_norms, fx.art.dim);

    long probe_row = 0;
    d.xi.maxCoeff(&probe_row);
    const long c = 400;
    const int M = 3000;
    double sum = 0;
    for (int m = 0; m < M; ++m) {
        const SketchPlan plan = draw(d, c, 77 + m);
        const long count = std::count(plan.indices.begin(), plan.indices.end(),
                                      static_cast<std::int32_t>(probe_row));
        sum += static_cast<double>(count) / (static_cast<double>(c) * d.xi[probe_row]);
    }
    const double mean = sum / M;
    const double xi = d.xi[probe_row];
    const double se = std::sqrt((1 - xi) / (xi * c)) / std::sqrt(static_cast<double>(M));
    CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("variance-optimal weights beat the alternatives empirically") {
    const auto fx = make_fixture(2, 5, BcLayout::all_dirichlet, ProblemKind::dirichlet, 5);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.1, 10.0, 19)}, fx.vols);
    const Eigen::MatrixXd G = exact_gram(fx.art, s);

    const SamplingDistribution opt = sampling_distribution(s, fx.art.row_norms, fx.art.dim);
    const SamplingDistribution alg = sampling_distribution(s, fx.art.row_norms, fx.art.dim,
                                                           DistMode::alg1);
    const SamplingDistribution uni = uniform_dist(fx.art.kd());

    const long c = 150;
    const int M = 1200;
    auto mean_dev = [&](const SamplingDistribution& d) {
        double acc = 0;
        for (int m = 0; m < M; ++m)
            acc += (sketch_gram(fx.art, s, draw(d, c, 31 + m), d).Ghat - G).squaredNorm();
        return acc / M;
    };

    const double dev_opt = mean_dev(opt);
    const double dev_alg = mean_dev(alg);
    const double dev_uni = mean_dev(uni);
    CHECK(dev_opt <= dev_alg * 1.05);
    CHECK(dev_opt <= dev_uni * 1.05);

    // Every mode matches its own analytic variance formula.
    CHECK(dev_opt == doctest::Approx(variance_report(fx.art, s, opt, G, c).exact).epsilon(0.2));
    CHECK(dev_alg == doctest::Approx(variance_report(fx.art, s, alg, G, c).exact).epsilon(0.2));
    CHECK(dev_uni == doctest::Approx(variance_report(fx.art, s, uni, G, c).exact).epsilon(0.2));
}

TEST_CASE("sketched spectrum never exceeds the weighted norm total") {
    const auto fx = make_fixture(2, 4, BcLayout::all_dirichlet, ProblemKind::dirichlet, 6);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.1, 100.0, 23)}, fx.vols);
    const SamplingDistribution d = sampling_distribution(s, fx.art.row_norms, fx.art.dim);

    long double cap = 0;
    for (long row = 0; row < fx.art.kd(); ++row)
        cap += s.row_value(row, fx.art.dim) * fx.art.row_norms[row] * fx.art.row_norms[row];

    for (int m = 0; m < 200; ++m) {
        const SketchedGram sg = sketch_gram(fx.art, s, draw(d, 40, 500 + m), d);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sg.Ghat, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().maxCoeff() <=
              static_cast<double>(cap) * (1 + 1e-9));
    }
}

TEST_CASE("solve_sketched basics and failure modes") {
    const auto fx = make_fixture(2, 5, BcLayout::all_dirichlet, ProblemKind::dirichlet, 6, 1.0);

    SketchedGram id;
    id.Ghat = Eigen::MatrixXd::Identity(6, 6);
    id.c = 10;
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(6);
    e1[0] = 1;
    const SketchedSolution sol = solve_sketched(id, e1, fx.art.Psi);
    CHECK((sol.r_hat - e1).norm() < 1e-14);
    CHECK((sol.u_hat - fx.art.Psi * sol.r_hat).norm() <= 1e-12);

    // c < rho leaves the sketch rank-deficient.
    const Scaling s{fx.vols.omega};
    const SamplingDistribution d = sampling_distribution(s, fx.art.row_norms, fx.art.dim);
    const SketchPlan tiny = draw(d, 3, 7);
    const SketchedGram sg = sketch_gram(fx.art, s, tiny, d);
    try {
        solve_sketched(sg, fx.art.PsiTb, fx.art.Psi);
        FAIL("expected InsufficientSamplesError");
    } catch (const InsufficientSamplesError& e) {
        CHECK(e.rank <= 3);
        CHECK(e.samples == 3);
        CHECK(e.rho == 6);
    }
}

TEST_CASE("feeding the exact Gram reproduces the deterministic solution") {
    const auto fx = make_fixture(2, 6, BcLayout::all_dirichlet, ProblemKind::dirichlet, 8, 1.0);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.1, 10.0, 29)}, fx.vols);
    const Eigen::MatrixXd G = exact_gram(fx.art, s);

    SketchedGram exact;
    exact.Ghat = G;
    exact.c = 0;
    const SketchedSolution sol = solve_sketched(exact, fx.art.PsiTb, fx.art.Psi);
    const Eigen::VectorXd r_ref = G.ldlt().solve(fx.art.PsiTb);
    CHECK((sol.r_hat - r_ref).norm() <= 1e-12 * r_ref.norm());
}

TEST_CASE("exact Gram equals the projected stiffness") {
    const auto fx = make_fixture(2, 6, BcLayout::all_dirichlet, ProblemKind::dirichlet, 7);
    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.1, 10.0, 31)}, fx.vols);
    const Eigen::MatrixXd G = exact_gram(fx.art, s);
    const Eigen::MatrixXd A(assemble_stiffness(fx.g, s));
    const Eigen::MatrixXd G_ref = fx.basis.Psi.transpose() * A * fx.basis.Psi;
    CHECK((G - G_ref).norm() <= 1e-12 * G_ref.norm());
    CHECK((G - exact_gram_reference(fx.art, s)).norm() <= 1e-12 * G.norm());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * G.norm());
}

TEST_CASE("identity basis makes the Gram the densified stiffness") {
    const auto fx = make_fixture(2, 3, BcLayout::all_dirichlet, ProblemKind::dirichlet, 2);
    const int n = fx.g.n_dof();
    Basis identity;
    identity.Psi = Eigen::MatrixXd::Identity(n, n);
    identity.eigenvalues = Eigen::VectorXd::Ones(n);
    identity.dpsi_col_norms = Eigen::VectorXd::Ones(n);
    identity.residuals = Eigen::VectorXd::Zero(n);
    const OfflineArtifact art = precompute(fx.mesh, fx.g, fx.vols, identity, fx.load.b);

    const Scaling s = assemble_scaling({random_p(fx.mesh.num_elements(), 0.5, 2.0, 37)}, fx.vols);
    const Eigen::MatrixXd G = exact_gram(art, s);
    const Eigen::MatrixXd A(assemble_stiffness(fx.g, s));
    CHECK((G - A).norm() <= 1e-12 * A.norm());
}
