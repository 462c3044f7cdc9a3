#include <benchmark/benchmark.h>

#include <nlkv/anticipation.hpp>
#include <nlkv/fields.hpp>
#include <nlkv/validation.hpp>

namespace {

const nlkv::TrajectorySet& traffic(std::size_t blocks) {
    static std::vector<std::pair<std::size_t, nlkv::TrajectorySet>> cache;
    for (const auto& [n, set] : cache) {
        if (n == blocks) return set;
    }
    nlkv::SyntheticScenario s;
    s.densities.assign(blocks, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) s.densities[b] = b % 2 ? 120.0 : 40.0;
    cache.emplace_back(blocks, nlkv::synthesize_stationary_trajectories(s));
    return cache.back().second;
}

void BM_EdieFields(benchmark::State& state) {
    const auto& set = traffic(static_cast<std::size_t>(state.range(0)));
    const nlkv::GridSpec spec;
    for (auto _ : state) benchmark::DoNotOptimize(nlkv::estimate_vk_fields(set, spec));
    state.counters["vehicles"] = static_cast<double>(set.size());
}
BENCHMARK(BM_EdieFields)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_FieldBundle(benchmark::State& state) {
    const auto& set = traffic(2);
    const nlkv::GridSpec spec;
    for (auto _ : state) benchmark::DoNotOptimize(nlkv::estimate_field_bundle(set, spec));
}
BENCHMARK(BM_FieldBundle)->Unit(benchmark::kMillisecond);

}  // namespace
