// Micro-benchmark comparing the OpenMP kernels against their serial
// reference implementations: sketched Gram accumulation, exact projected
// Gram, and stiffness assembly.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "sketchfem/analysis.hpp"
#include "sketchfem/artifact.hpp"
#include "sketchfem/parallel.hpp"
#include "sketchfem/pipeline.hpp"
#include "sketchfem/sketch.hpp"
#include "sketchfem/subspace.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <class Fn>
double time_median_ms(Fn&& fn, int reps) {
    std::vector<double> ms;
    ms.reserve(static_cast<size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        fn();
        ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    return ms[ms.size() / 2];
}

} // namespace

int main(int argc, char** argv) {
    using namespace sketchfem;

    int m = 32;
    int rho = 50;
    long c = 100000;
    int reps = 9;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        const long v = std::atol(argv[i + 1]);
        if (flag == "--m") m = static_cast<int>(v);
        else if (flag == "--rho") rho = static_cast<int>(v);
        else if (flag == "--c") c = v;
        else if (flag == "--reps") reps = static_cast<int>(v);
    }

    const Mesh mesh = generate_structured(2, m, BcLayout::all_dirichlet);
    const GradientFactor g = shape_gradients(mesh, ProblemKind::dirichlet);
    const ElementVolumes vols = element_volumes(mesh);
    const Basis basis = smallest_eigvecs(laplacian(g), rho);
    const LoadVector load = assemble_load(mesh, Eigen::VectorXd::Ones(mesh.num_elements()),
                                          Eigen::VectorXd::Zero(mesh.num_facets()),
                                          Eigen::VectorXd::Zero(mesh.num_nodes()), g,
                                          Scaling{vols.omega});
    const OfflineArtifact art = precompute(mesh, g, vols, basis, load.b);

    const ParamSampler sampler = ParamSampler::parse("uniform:0.1:100");
    const Scaling s = assemble_scaling(ParameterQuery{sampler.sample(art.k, 1, 0)}, vols);
    const SamplingDistribution dist = sampling_distribution(s, art.row_norms, art.dim);
    const SketchPlan plan = draw(dist, c, 42);

    std::printf("mesh m=%d (n_dof=%d, kd=%ld), rho=%d, c=%ld, threads=%d\n", m, art.n_dof,
                art.kd(), rho, c, thread_cap());
    std::printf("%-24s %12s %12s %9s\n", "kernel", "serial (ms)", "openmp (ms)", "speedup");

    auto row = [&](const char* name, double serial_ms, double parallel_ms) {
        std::printf("%-24s %12.3f %12.3f %8.2fx\n", name, serial_ms, parallel_ms,
                    parallel_ms > 0 ? serial_ms / parallel_ms : 0.0);
    };

    {
        const double ser = time_median_ms([&] { (void)sketch_gram_reference(art, s, plan, dist); }, reps);
        const double par = time_median_ms([&] { (void)sketch_gram(art, s, plan, dist); }, reps);
        row("sketch_gram", ser, par);
    }
    {
        const double ser = time_median_ms([&] { (void)exact_gram_reference(art, s); }, reps);
        const double par = time_median_ms([&] { (void)exact_gram(art, s); }, reps);
        row("exact_gram", ser, par);
    }
    {
        set_thread_cap(1);
        const double ser = time_median_ms([&] { (void)draw(dist, c, 42); }, reps);
        set_thread_cap(0);
        const double par = time_median_ms([&] { (void)draw(dist, c, 42); }, reps);
        row("draw (1 thread vs all)", ser, par);
    }
    {
        const double assemble = time_median_ms([&] { (void)assemble_stiffness(g, s); }, reps);
        const SparseColMajor A = assemble_stiffness(g, s);
        const double solve = time_median_ms([&] { (void)exact_solve(A, art.b); }, reps);
        std::printf("%-24s %12.3f %12.3f   (assemble / factor+solve, for scale)\n",
                    "exact path", assemble, solve);
    }
    return 0;
}
