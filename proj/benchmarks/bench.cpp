#include <benchmark/benchmark.h>

#include <vector>

#include "uavloc/channel.hpp"
#include "uavloc/citymap.hpp"
#include "uavloc/learning.hpp"
#include "uavloc/netgain.hpp"
#include "uavloc/pso.hpp"
#include "uavloc/rng.hpp"

using namespace uavloc;

namespace {

const CityMap& bench_city() {
    static const CityMap map = generate_city({0, 0}, {400, 400}, 40, default_height_scale(), 1);
    return map;
}

SynthesizedData bench_data(int users, int poses) {
    const CityMap& map = bench_city();
    const std::vector<Vec2> u = random_users(map, users, 2);
    const std::vector<UavPose> p = random_poses({0, 0}, {400, 400}, poses, 40.0, 100.0, 3);
    return synthesize_dataset(map, PathLossParams::urban_micro(), u, p, 4);
}

}  // namespace

static void BM_IsLos(benchmark::State& state) {
    const CityMap& map = bench_city();
    Rng rng(5);
    std::vector<UavPose> poses;
    std::vector<Vec2> users;
    for (int i = 0; i < 256; ++i) {
        poses.push_back({{rng.uniform(0, 400), rng.uniform(0, 400), rng.uniform(40, 100)}, 0.0});
        users.push_back({rng.uniform(0, 400), rng.uniform(0, 400)});
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(map.is_los(poses[i & 255].position, users[i & 255]));
        ++i;
    }
}
BENCHMARK(BM_IsLos);

static void BM_Classify200(benchmark::State& state) {
    const CityMap& map = bench_city();
    const std::vector<UavPose> poses = random_poses({0, 0}, {400, 400}, 200, 40.0, 100.0, 6);
    const Vec2 user{123.0, 321.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(map.classify(poses, user, 0.0));
    }
}
BENCHMARK(BM_Classify200);

static void BM_ForwardBatch(benchmark::State& state) {
    const GainNetwork net = GainNetwork::make_default(7);
    const std::vector<UavPose> poses =
        random_poses({0, 0}, {400, 400}, state.range(0), 40.0, 100.0, 8);
    const Eigen::MatrixXd inputs = feature_matrix(poses, {200.0, 200.0});
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward_batch(inputs));
    }
}
BENCHMARK(BM_ForwardBatch)->Arg(128)->Arg(200);

static void BM_Gradient128(benchmark::State& state) {
    const GainNetwork net = GainNetwork::make_default(9);
    const std::vector<UavPose> poses = random_poses({0, 0}, {400, 400}, 128, 40.0, 100.0, 10);
    GainBatch batch;
    batch.inputs = feature_matrix(poses, {200.0, 200.0});
    batch.targets = Eigen::VectorXd::LinSpaced(128, -5.0, 5.0);
    batch.weights = Eigen::VectorXd::Constant(128, 0.5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gradient(net, batch));
    }
}
BENCHMARK(BM_Gradient128);

static void BM_Objective200(benchmark::State& state) {
    const CityMap& map = bench_city();
    const SynthesizedData data = bench_data(1, 200);
    const HybridChannelModel hybrid = HybridChannelModel::with_network(
        PathLossParams::urban_micro(), GainNetwork::make_default(11));
    const Vec2 cand{200.0, 200.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(objective(hybrid, map, data.measurements, cand));
    }
}
BENCHMARK(BM_Objective200);

static void BM_FitPathloss2000(benchmark::State& state) {
    const SynthesizedData data = bench_data(10, 200);
    const TrainingSet train = TrainingSet::build(bench_city(), data.measurements, data.users);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_pathloss(train));
    }
}
BENCHMARK(BM_FitPathloss2000);

BENCHMARK_MAIN();
