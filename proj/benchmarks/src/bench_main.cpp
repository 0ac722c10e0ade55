#include <benchmark/benchmark.h>

#include <vector>

#include "noma/gmm.hpp"
#include "noma/harness.hpp"
#include "noma/receiver.hpp"

using namespace noma;

namespace {

SimulatedFrame frame(int users, int n, double top_db = 25.0) {
    std::vector<double> betas;
    for (int u = 0; u < users; ++u) betas.push_back(db_to_linear(top_db - 6.0 * u));
    return simulate_frame(betas, n, 1.0, point_stream(7, 0).substream(0));
}

void BM_GmmFit(benchmark::State& state) {
    const auto sim = frame(1, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(gmm::fit(sim.block.samples));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GmmFit)->Arg(50)->Arg(100)->Arg(500);

// Spherical-shared covariance is the K-means-like variant of the same fit.
void BM_GmmFitSpherical(benchmark::State& state) {
    const auto sim = frame(1, static_cast<int>(state.range(0)));
    gmm::EmConfig em;
    em.covariance_model = gmm::CovarianceModel::SphericalShared;
    for (auto _ : state) benchmark::DoNotOptimize(gmm::fit(sim.block.samples, em));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GmmFitSpherical)->Arg(50)->Arg(100)->Arg(500);

void BM_MlDetect(benchmark::State& state) {
    const int users = static_cast<int>(state.range(0));
    const auto sim = frame(users, 500);
    for (auto _ : state) benchmark::DoNotOptimize(ml_detect_full_csi(sim.block, sim.channels));
    state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_MlDetect)->DenseRange(1, 3);

void BM_SicDetect(benchmark::State& state) {
    const int users = static_cast<int>(state.range(0));
    const auto sim = frame(users, 500);
    for (auto _ : state) benchmark::DoNotOptimize(sic_detect(sim.block, users));
    state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_SicDetect)->DenseRange(1, 3);

}  // namespace

BENCHMARK_MAIN();
