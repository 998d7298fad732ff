// Serial reference kernels against the stencil/OpenMP kernels.
//
//   ./bench_kernels --benchmark_filter=EvalField
//
// Arguments: cloud size, then the worker count for the parallel variants.

#include <benchmark/benchmark.h>

#include <cmath>
#include <iostream>
#include <map>

#include "pucci/solver.hpp"

using namespace pucci;

namespace {

struct Fixture {
    DataCloud cloud;
    OperatorSpec spec;
    std::vector<std::size_t> interior;
    GraphFunction u;
};

const Fixture& fixture(std::size_t n) {
    static std::map<std::size_t, Fixture> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const Domain d = Domain::annulus(2, {0, 0, 0}, 0.25, 1.0);
    OperatorParams p;
    p.epsilon = 0.15;
    DataCloud c = sample_cloud(d, Density::uniform(d), n, 42);
    const auto strip = boundary_strip(c, p.Lambda * p.epsilon + p.tau * p.epsilon * p.epsilon);
    std::vector<char> on(c.size(), 0);
    for (auto i : strip) on[i] = 1;
    std::vector<std::size_t> interior;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (!on[i]) interior.push_back(i);
    GraphFunction u(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) u[i] = std::sin(3 * c[i][0]) * std::cos(2 * c[i][1]);
    return cache.emplace(n, Fixture{c, OperatorSpec::pucci(Sign::Max, p), interior, u}).first->second;
}

void BM_ReferenceEvalField(benchmark::State& st) {
    const Fixture& f = fixture(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(reference::eval_field(f.cloud, f.spec, f.u, f.interior));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(f.interior.size()));
}

void BM_StencilEvalField(benchmark::State& st) {
    const Fixture& f = fixture(static_cast<std::size_t>(st.range(0)));
    set_num_threads(static_cast<int>(st.range(1)));
    const Stencil s(f.cloud, f.spec, f.interior);
    for (auto _ : st) benchmark::DoNotOptimize(eval_field(s, f.u));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(f.interior.size()));
    set_num_threads(0);
}

void BM_StencilBuild(benchmark::State& st) {
    const Fixture& f = fixture(static_cast<std::size_t>(st.range(0)));
    set_num_threads(static_cast<int>(st.range(1)));
    for (auto _ : st) benchmark::DoNotOptimize(Stencil(f.cloud, f.spec, f.interior).rows());
    set_num_threads(0);
}

void BM_Sweep(benchmark::State& st) {
    const Fixture& f = fixture(static_cast<std::size_t>(st.range(0)));
    set_num_threads(static_cast<int>(st.range(1)));
    const auto order = st.range(2) ? SweepOrder::GaussSeidel : SweepOrder::Jacobi;
    const Stencil s(f.cloud, f.spec, f.interior);
    const std::vector<double> rhs(f.interior.size(), 0.0);
    GraphFunction u = f.u;
    for (auto _ : st) benchmark::DoNotOptimize(sweep(s, rhs, u, order));
    st.SetLabel(order == SweepOrder::Jacobi ? "jacobi" : "gauss_seidel");
    set_num_threads(0);
}

void thread_args(benchmark::internal::Benchmark* b) {
    const int hw = std::max(1, num_threads());
    for (int n : {2000, 8000})
        for (int t : {1, hw}) {
            b->Args({n, t});
            if (hw == 1) break;
        }
}

}  // namespace

BENCHMARK(BM_ReferenceEvalField)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StencilEvalField)->Apply(thread_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StencilBuild)->Apply(thread_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep)
    ->Apply([](benchmark::internal::Benchmark* b) {
        const int hw = std::max(1, num_threads());
        for (int t : {1, hw}) {
            b->Args({8000, t, 0});
            if (hw == 1) break;
        }
        b->Args({8000, 1, 1});
    })
    ->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
    // agreement check before timing
    const Fixture& f = fixture(2000);
    const GraphFunction a = reference::eval_field(f.cloud, f.spec, f.u, f.interior);
    const GraphFunction b = eval_field(Stencil(f.cloud, f.spec, f.interior), f.u);
    if (a != b) {
        std::cerr << "stencil and reference kernels disagree\n";
        return 1;
    }
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
