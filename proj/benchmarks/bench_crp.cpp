#include <benchmark/benchmark.h>

#include "prosim/community.hpp"
#include "prosim/inference.hpp"
#include "prosim/snapshot.hpp"

using namespace prosim;

namespace {

Hierarchy loaded_hierarchy(int customers) {
    Hierarchy h(LexiconConfig::defaults());
    const RestaurantId root = h.add_restaurant(1.0, std::nullopt);
    const RestaurantId mid = h.add_restaurant(1.0, root);
    const RestaurantId leaf = h.add_restaurant(0.5, mid);
    Rng rng(1);
    for (int i = 0; i < customers; ++i) h.draw(leaf, rng);
    return h;
}

CommunityConfig bench_community(std::size_t members) {
    CommunityConfig cfg;
    for (std::size_t i = 0; i < members; ++i)
        cfg.members.push_back({"m" + std::to_string(i), i % 2 == 0 ? SpeakerProfile::flexible()
                                                                   : SpeakerProfile::rigid()});
    cfg.seed = 1;
    return cfg;
}

void BM_SeatUnseat(benchmark::State& state) {
    Hierarchy h = loaded_hierarchy(static_cast<int>(state.range(0)));
    const auto leaf = static_cast<RestaurantId>(h.restaurant_count() - 1);
    Rng rng(2);
    const Form he = make_paradigm("he/him/his/his/himself");
    for (auto _ : state) {
        const SeatRecord rec = h.seat(leaf, he, rng);
        h.unseat(rec);
        benchmark::DoNotOptimize(rec.table);
    }
}
BENCHMARK(BM_SeatUnseat)->Arg(10)->Arg(100)->Arg(1000);

void BM_Predictive(benchmark::State& state) {
    Hierarchy h = loaded_hierarchy(static_cast<int>(state.range(0)));
    const auto leaf = static_cast<RestaurantId>(h.restaurant_count() - 1);
    for (auto _ : state) {
        const Predictive p = h.predictive(leaf);
        benchmark::DoNotOptimize(p.residual);
    }
}
BENCHMARK(BM_Predictive)->Arg(10)->Arg(100)->Arg(1000);

void BM_CommunityStep(benchmark::State& state) {
    CommunityState c = new_community(bench_community(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) {
        const auto events = community_step(c);
        benchmark::DoNotOptimize(events.size());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(c.clock));
}
BENCHMARK(BM_CommunityStep)->Arg(4)->Arg(10)->Arg(30);

void BM_GibbsSweep(benchmark::State& state) {
    CommunityState c = new_community(bench_community(6));
    community_run(c, static_cast<std::uint64_t>(state.range(0)));
    FitConfig cfg;
    cfg.sweeps = 1;
    cfg.burn_in = 0;
    cfg.thin = 1;
    for (auto _ : state) {
        const FitResult fit = fit_gibbs(c.log, cfg);
        benchmark::DoNotOptimize(fit.samples);
    }
}
BENCHMARK(BM_GibbsSweep)->Arg(50)->Arg(200);

void BM_SnapshotRoundTrip(benchmark::State& state) {
    CommunityState c = new_community(bench_community(10));
    community_run(c, 200);
    for (auto _ : state) {
        const std::string snap = snapshot_to_string(c);
        CommunityState back = snapshot_from_string(snap);
        benchmark::DoNotOptimize(back.clock);
    }
}
BENCHMARK(BM_SnapshotRoundTrip);

} // namespace

BENCHMARK_MAIN();
