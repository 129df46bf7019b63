#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uavloc/channel.hpp"
#include "uavloc/citymap.hpp"
#include "uavloc/learning.hpp"
#include "uavloc/pso.hpp"

namespace uavloc {

// Either a city file to load (path nonempty) or parameters for the seeded
// generator.
struct MapSpec {
    std::string path;
    Vec2 extent_min{0.0, 0.0};
    Vec2 extent_max{500.0, 500.0};
    int buildings = 60;
    double height_scale = default_height_scale();
};

struct PoseSamplingSpec {
    enum class Pattern { Random, Lawnmower };
    Pattern pattern = Pattern::Random;
    int count = 200;
    double altitude_min = 40.0;
    double altitude_max = 100.0;
};

struct ExperimentConfig {
    MapSpec map;
    PathLossParams channel = PathLossParams::urban_micro();
    int train_users = 10;
    PoseSamplingSpec train_poses;
    int test_users = 10;
    PoseSamplingSpec test_poses;
    int trials = 20;
    double user_height = 0.0;
    double gain_scale = 1.0;
    double noise_scale = 1.0;
    GainTrainOptions gain_train;
    PsoConfig pso;
    std::uint64_t seed = 0;

    void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const ExperimentConfig& cfg, const std::string& path);

struct CdfCurve {
    std::vector<double> errors;
    std::vector<double> probs;
};

// Empirical CDF with tied samples collapsed onto one point carrying the
// run's upper probability.
CdfCurve make_cdf(std::span<const double> errors);

// Smallest error whose cumulative probability reaches p.
double quantile(const CdfCurve& curve, double p);

struct TrialUserError {
    int trial = 0;
    int user = 0;
    // NaN marks a failed localization for that model.
    double error_hybrid = 0.0;
    double error_baseline = 0.0;
};

struct ChannelTraceRow {
    int n = 0;
    int k = 0;
    std::uint8_t los = 0;
    double dist = 0.0;
    double g_measured = 0.0;
    double g_hybrid = 0.0;
    double g_baseline = 0.0;
};

struct ExperimentReport {
    PathLossFit fit;
    GainTrainResult training;
    std::vector<TrialUserError> errors;
    CdfCurve cdf_hybrid;
    CdfCurve cdf_baseline;
    std::vector<ChannelTraceRow> traces;
    int failed_hybrid = 0;
    int failed_baseline = 0;
};

// Full pipeline: map, training data, two-phase channel fit, then paired
// hybrid/baseline localization over independently seeded Monte-Carlo trials.
// Artifacts are flushed into out_dir as each stage completes; a failure
// aborts with the stage name prefixed to the error.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

CityMap load_or_generate_map(const MapSpec& spec, std::uint64_t seed);
std::vector<UavPose> make_poses(const PoseSamplingSpec& spec, const CityMap& map,
                                std::uint64_t seed);

// Worker threads for trial execution: UAVLOC_WORKERS when set, otherwise the
// hardware thread count (at least 1).
int worker_count();

void save_errors_csv(std::span<const TrialUserError> rows, const std::string& path);
std::vector<TrialUserError> load_errors_csv(const std::string& path);
void save_cdf_csv(const CdfCurve& curve, const std::string& path);
CdfCurve load_cdf_csv(const std::string& path);
void save_traces_csv(std::span<const ChannelTraceRow> rows, const std::string& path);
std::vector<ChannelTraceRow> load_traces_csv(const std::string& path);

}  // namespace uavloc
