#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include <nlkv/fitting.hpp>

namespace {

std::vector<nlkv::NlkvSample> samples(std::size_t m) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<nlkv::NlkvSample> out(m);
    for (auto& s : out) s = {0.001 + 0.18 * u(rng), 30 * u(rng), static_cast<std::uint8_t>(u(rng) < 0.4), 0, 0, 0.0};
    return out;
}

void BM_EceLoss(benchmark::State& state) {
    const auto s = samples(static_cast<std::size_t>(state.range(0)));
    const nlkv::FdParams p = nlkv::Smulders{86.8, 65.0, 199.9};
    for (auto _ : state) benchmark::DoNotOptimize(nlkv::ece_loss(p, s, 0.6));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EceLoss)->Arg(1 << 12)->Arg(1 << 18);

void BM_LseLoss(benchmark::State& state) {
    std::vector<nlkv::LkvSample> s;
    for (const auto& x : samples(static_cast<std::size_t>(state.range(0)))) s.push_back({x.k_a, x.v});
    const nlkv::FdParams p = nlkv::Greenberg{46.3, 189.9};
    for (auto _ : state) benchmark::DoNotOptimize(nlkv::lse_loss(p, s));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LseLoss)->Arg(1 << 12)->Arg(1 << 18);

void BM_EceFit(benchmark::State& state) {
    const auto s = samples(20000);
    nlkv::FitConfig cfg;
    cfg.starts = 4;
    for (auto _ : state) benchmark::DoNotOptimize(nlkv::fit_fd(nlkv::ModelKind::smulders, s, cfg));
}
BENCHMARK(BM_EceFit)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace
