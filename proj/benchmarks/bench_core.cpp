// Microbenchmarks for the hot paths: Krylov design assembly, the closed-form
// quadratic-model build, expanded powers and the regularized solve.

#include <benchmark/benchmark.h>

#include <random>

#include "egf/datasets.hpp"
#include "egf/learning.hpp"
#include "egf/oracle.hpp"

using namespace egf;

namespace {

struct Fixture {
    Graph g{0, Eigen::MatrixXd()};
    Eigen::VectorXd b, a, t;
    ExpandedSignal s;
    NoisyTarget target;
    SampleMask mask;
    MomentStatistics stats;

    explicit Fixture(int n) {
        Rng rng(12345);
        g = generate_ba(n, 2, rng);
        std::normal_distribution<double> normal(0.0, 1.0);
        const auto draw = [&](int len) {
            return Eigen::VectorXd::NullaryExpr(len, [&](Eigen::Index) { return normal(rng); });
        };
        b = draw(n).cwiseAbs();
        a = draw(n).cwiseAbs();
        t = draw(n);
        s = ExpandedSignal{t, 0.5};
        target = NoisyTarget{t, 0.5, 0.1};
        mask = SampleMask::all(n + 1);
        AttachmentModel model = uniform_model(n, 2, Eigen::VectorXd::Ones(n));
        stats = estimate_moments(model, 1000, rng);
    }
};

void bm_design_matrix(benchmark::State& state) {
    const Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(build_design_matrix(f.g, f.b, f.a, f.s, 4, 4));
}
BENCHMARK(bm_design_matrix)->Arg(50)->Arg(100)->Arg(200);

void bm_naive_design_matrix(benchmark::State& state) {
    const Fixture f(static_cast<int>(state.range(0)));
    const Eigen::VectorXd x_full = f.s.full();
    for (auto _ : state)
        benchmark::DoNotOptimize(naive_design_matrix(f.g, f.b, f.a, x_full, 4, 4));
}
BENCHMARK(bm_naive_design_matrix)->Arg(50)->Arg(100);

void bm_quadratic_model(benchmark::State& state) {
    const Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            build_quadratic_model(f.g, f.target, f.mask, f.stats, f.stats, 4, 4));
}
BENCHMARK(bm_quadratic_model)->Arg(50)->Arg(100)->Arg(200);

void bm_dirichlet_pair(benchmark::State& state) {
    const Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(build_dirichlet_pair(f.g, f.target, f.stats, f.stats, 4, 4));
}
BENCHMARK(bm_dirichlet_pair)->Arg(50)->Arg(100)->Arg(200);

void bm_expanded_power(benchmark::State& state) {
    const Fixture f(static_cast<int>(state.range(0)));
    const ExpandedAdjacency e = expand(f.g, Direction::incoming, f.b);
    for (auto _ : state) benchmark::DoNotOptimize(expanded_power(e, 6));
}
BENCHMARK(bm_expanded_power)->Arg(50)->Arg(100)->Arg(200);

void bm_solve_denoising(benchmark::State& state) {
    const Fixture f(100);
    const QuadraticModel qm =
        build_quadratic_model(f.g, f.target, f.mask, f.stats, f.stats, 4, 4);
    const RegularizerWeights reg{0.5, 0.5, 0.5};
    for (auto _ : state) benchmark::DoNotOptimize(solve_denoising(qm, reg));
}
BENCHMARK(bm_solve_denoising);

}  // namespace

BENCHMARK_MAIN();
