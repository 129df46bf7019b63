#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uavloc/geometry.hpp"

namespace uavloc {

/// Axis-aligned building box extruded from the ground plane.
struct Building {
    Vec2 footprint_min;
    Vec2 footprint_max;
    double height = 0.0;
};

/// Bounded ground plane with extruded box buildings. Immutable after
/// construction; all queries are read-only and safe to call concurrently.
class CityMap {
  public:
    /// Validates extent and buildings. Overlapping buildings are accepted
    /// (the generator never produces them, loaded maps only get a warning);
    /// a footprint outside the extent or a non-positive height is an error.
    CityMap(Vec2 extent_min, Vec2 extent_max, std::vector<Building> buildings);

    const Vec2& extent_min() const { return extent_min_; }
    const Vec2& extent_max() const { return extent_max_; }
    const std::vector<Building>& buildings() const { return buildings_; }

    bool contains(const Vec2& p) const;
    double extent_diagonal() const;

    /// True iff the open segment a-b clears every building box. Grazing a
    /// footprint edge or touching a roofline exactly does not block.
    bool segment_clear(const Vec3& a, const Vec3& b) const;

    /// Line-of-sight between a UAV position and a ground point at the given
    /// receiver height. Throws std::domain_error if the UAV is not above the
    /// ground plane or either endpoint lies outside the extent.
    bool is_los(const Vec3& uav, const Vec2& user, double user_height = 0.0) const;

    /// Per-pose LoS labels (1 = LoS) for a fixed ground point.
    std::vector<std::uint8_t> classify(std::span<const UavPose> poses, const Vec2& user,
                                       double user_height = 0.0) const;

    /// True if any recorded footprints overlap (loader diagnostic).
    bool has_overlaps() const { return has_overlaps_; }

  private:
    Vec2 extent_min_;
    Vec2 extent_max_;
    std::vector<Building> buildings_;
    bool has_overlaps_ = false;
};

/// Rayleigh scale whose mean matches the default building height of 15 m.
double default_height_scale();

/// Deterministically places non-overlapping buildings on a jittered grid with
/// street gaps between cells. Heights are Rayleigh(height_scale) clamped to
/// [5, 40] m. Throws std::invalid_argument if building_count does not fit.
CityMap generate_city(Vec2 extent_min, Vec2 extent_max, int building_count,
                      double height_scale, std::uint64_t seed);

CityMap load_city(const std::string& path);
void save_city(const CityMap& map, const std::string& path);

}  // namespace uavloc
