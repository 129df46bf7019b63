#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uavloc/citymap.hpp"
#include "uavloc/geometry.hpp"

namespace uavloc {

enum class Segment : std::uint8_t { Nlos = 0, Los = 1 };

inline Segment segment_from_label(std::uint8_t los) { return los ? Segment::Los : Segment::Nlos; }

/// Segmented log-distance parameters. Shadowing variances are in dB^2 and
/// treated as known; they weight the likelihood terms downstream.
struct PathLossParams {
    double alpha_los = 0.0;
    double beta_los = 0.0;
    double sigma2_los = 0.0;
    double alpha_nlos = 0.0;
    double beta_nlos = 0.0;
    double sigma2_nlos = 0.0;

    double alpha(Segment z) const { return z == Segment::Los ? alpha_los : alpha_nlos; }
    double beta(Segment z) const { return z == Segment::Los ? beta_los : beta_nlos; }
    double sigma2(Segment z) const { return z == Segment::Los ? sigma2_los : sigma2_nlos; }

    /// Urban-micro defaults used by the simulation ground truth.
    static PathLossParams urban_micro() { return {2.2, -32.0, 2.0, 3.2, -35.0, 5.0}; }
};

/// Mean channel gain in dB at 3D distance d (meters): beta - 10*alpha*log10(d).
double path_loss(const PathLossParams& params, Segment z, double d);

/// Anisotropic UAV antenna pattern used as simulation ground truth:
/// 15 * (|cos rho| + 2*|sin(azimuth + heading)|).
double gain_from_angles(double elevation, double azimuth_plus_heading);

/// Same pattern from geometry. Elevation is measured from the horizontal
/// plane toward the UAV as seen from the user; azimuth from north (+y),
/// clockwise. Throws std::domain_error for coincident points.
double true_antenna_gain(const UavPose& pose, const Vec2& user, double user_height = 0.0);

/// One RSS sample. Time indices start at 1; user ids index the user list.
struct Measurement {
    int n = 0;
    int k = 0;
    UavPose pose;
    double g = 0.0;
};

struct SynthesizedData {
    std::vector<Measurement> measurements;    // pose-major, user-minor order
    std::vector<std::uint8_t> los_labels;     // parallel ground-truth labels
    std::vector<Vec2> users;
};

struct SynthesisOptions {
    double user_height = 0.0;
    double gain_scale = 1.0;    // scales the true antenna pattern; 0 disables it
    double noise_scale = 1.0;   // scales the shadowing draw; 0 is the noiseless limit
};

/// Draws g = path_loss + gain + shadowing for every (pose, user) pair, with
/// the LoS/NLoS branch resolved against the map. Deterministic per seed.
SynthesizedData synthesize_dataset(const CityMap& map, const PathLossParams& params,
                                   std::span<const Vec2> users, std::span<const UavPose> poses,
                                   std::uint64_t seed, const SynthesisOptions& opts = {});

/// Uniform measurement poses over the extent within an altitude band,
/// headings uniform over [-pi, pi).
std::vector<UavPose> random_poses(const Vec2& extent_min, const Vec2& extent_max, int count,
                                  double alt_min, double alt_max, std::uint64_t seed);

/// Uniform user positions; keeps users off building footprints unless
/// allow_in_buildings is set.
std::vector<Vec2> random_users(const CityMap& map, int count, std::uint64_t seed,
                               bool allow_in_buildings = false);

// Line-delimited JSON logs. Floats round-trip exactly.
void save_measurements(std::span<const Measurement> measurements, const std::string& path);
std::vector<Measurement> load_measurements(const std::string& path);

/// Ground-truth sidecar rows: (n, k, los label, true user position).
struct TruthRecord {
    int n = 0;
    int k = 0;
    std::uint8_t los = 0;
    Vec2 user;
};

void save_truth(const SynthesizedData& data, const std::string& path);
std::vector<TruthRecord> load_truth(const std::string& path);

}  // namespace uavloc
