#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "uavloc/citymap.hpp"
#include "uavloc/geometry.hpp"
#include "uavloc/learning.hpp"

namespace uavloc {

struct Particle {
    Vec2 position{};
    Vec2 velocity{};
    Vec2 best_position{};
    double best_objective = 0.0;
};

struct PsoConfig {
    int particles = 100;
    int iterations = 150;
    double inertia = 0.72;
    double cognitive = 1.49;
    double social = 1.49;
    // 0 selects the default cap: 10% of the map extent diagonal.
    double velocity_cap = 0.0;
    std::uint64_t seed = 0;
    double user_height = 0.0;
    bool use_classification_cache = false;

    void validate() const;
    double resolved_velocity_cap(const CityMap& map) const;
};

struct LocalizationResult {
    int user = 0;
    Vec2 estimate{};
    double objective = 0.0;
    // gbest objective after initialization and after each iteration
    // (iterations + 1 entries).
    std::vector<double> trace;
    std::optional<double> error_m;
    std::optional<std::string> failure;

    bool ok() const { return !failure.has_value(); }
};

// Memoizes per-candidate LoS labels on a quantized grid of candidate cells;
// labels are evaluated at the cell center, so two candidates in the same cell
// share one classification.
class ClassificationCache {
  public:
    ClassificationCache(const CityMap& map, std::span<const UavPose> poses, double user_height,
                        double cell_size = 0.5);

    const std::vector<std::uint8_t>& labels(const Vec2& candidate);
    std::size_t size() const { return cells_.size(); }
    Vec2 cell_center(const Vec2& candidate) const;

  private:
    const CityMap& map_;
    std::vector<UavPose> poses_;
    double user_height_;
    double cell_size_;
    std::unordered_map<std::uint64_t, std::vector<std::uint8_t>> cells_;
};

// Maximum-likelihood localization cost of placing the user at `candidate`:
// every measurement pose is classified LoS/NLoS against the candidate via the
// map, then the label-count log-variance-ratio term is added to the
// inverse-variance-weighted squared prediction residuals. Candidates outside
// the map extent score +infinity instead of raising.
double objective(const HybridChannelModel& model, const CityMap& map,
                 std::span<const Measurement> measurements, const Vec2& candidate,
                 double user_height = 0.0, ClassificationCache* cache = nullptr);

LocalizationResult localize(const HybridChannelModel& model, const CityMap& map,
                            std::span<const Measurement> measurements, const PsoConfig& cfg);

// Runs localize once per user group with a per-user derived seed; a failed
// user is reported in its own entry and does not abort the others.
std::vector<LocalizationResult> localize_all(
    const HybridChannelModel& model, const CityMap& map,
    const std::vector<std::vector<Measurement>>& per_user, const PsoConfig& cfg);

// Splits a mixed measurement list into per-user groups ordered by user id.
std::vector<std::vector<Measurement>> group_by_user(std::span<const Measurement> measurements);

void save_localization_results(std::span<const LocalizationResult> results,
                               const std::string& path);
std::vector<LocalizationResult> load_localization_results(const std::string& path);

}  // namespace uavloc
