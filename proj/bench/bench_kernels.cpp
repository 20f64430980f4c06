// Serial vs parallel timings of the data-parallel kernels.
// Thread count follows SAFE_MDP_THREADS when set.

#include "support/random_models.hpp"

#include "safedp/constrained.hpp"
#include "safedp/parallel.hpp"
#include "safedp/simulation.hpp"

#include <benchmark/benchmark.h>

using namespace safedp;
using namespace safedp::testing;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

/// Redraws until the taboo set and action set are at their maxima.
MdpModel full_size(std::mt19937_64& rng, const CorpusOptions& opts) {
    for (;;) {
        auto m = random_model(rng, opts);
        if (m.n_taboo() == opts.max_taboo && m.n_actions() == opts.max_actions)
            return m;
    }
}

/// 8 taboo states and 4 actions: 65536 pure policies.
const MdpModel& wide_model() {
    static const MdpModel m = [] {
        std::mt19937_64 rng(3);
        return full_size(rng, {.min_states = 11, .max_states = 11, .max_taboo = 8, .max_actions = 4,
                               .min_forbidden = 1});
    }();
    return m;
}

void BM_EnumerateAdmissible(benchmark::State& state) {
    const auto& m = wide_model();
    for (auto _ : state) {
        auto set = enumerate_admissible(m, 0.5, default_policy_cap, exec_of(state));
        benchmark::DoNotOptimize(set.admissible.size());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * pure_policy_count(m)));
}

void BM_MonteCarlo(benchmark::State& state) {
    const auto& m = wide_model();
    std::mt19937_64 rng(4);
    const auto pi = random_policy(m, rng);
    const std::size_t n = 200000;
    for (auto _ : state) {
        auto rep = mc_estimates(m, pi, 0, n, 99, default_max_steps, exec_of(state));
        benchmark::DoNotOptimize(rep.value.mean);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void BM_DualAscent(benchmark::State& state) {
    std::mt19937_64 rng(5);
    const auto m = full_size(rng, {.min_states = 40, .max_states = 40, .max_taboo = 32, .max_actions = 4,
                                   .min_forbidden = 1});
    const double p = binding_bound(m, rng);
    DualOptions opts;
    opts.exec = exec_of(state);
    for (auto _ : state) {
        auto rep = dual_ascent(m, p, opts);
        benchmark::DoNotOptimize(rep.value.sum());
    }
}

} // namespace

BENCHMARK(BM_EnumerateAdmissible)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarlo)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DualAscent)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
