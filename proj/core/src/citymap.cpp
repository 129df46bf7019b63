#include "uavloc/citymap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

#include "uavloc/rng.hpp"

namespace uavloc {

namespace {

bool footprints_overlap(const Building& a, const Building& b) {
    return a.footprint_min.x < b.footprint_max.x && b.footprint_min.x < a.footprint_max.x &&
           a.footprint_min.y < b.footprint_max.y && b.footprint_min.y < a.footprint_max.y;
}

// Clips the parameter interval [t0, t1] of p(t) = a + t*d against one slab.
// A coordinate running exactly along a slab face is treated as outside, so
// edge-grazing segments never register an intersection.
bool clip_axis(double a, double d, double lo, double hi, double& t0, double& t1) {
    if (d == 0.0) {
        return a > lo && a < hi;
    }
    double ta = (lo - a) / d;
    double tb = (hi - a) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    return t0 < t1;
}

}  // namespace

CityMap::CityMap(Vec2 extent_min, Vec2 extent_max, std::vector<Building> buildings)
    : extent_min_(extent_min), extent_max_(extent_max), buildings_(std::move(buildings)) {
    if (!(extent_min_.x < extent_max_.x && extent_min_.y < extent_max_.y)) {
        throw std::invalid_argument("city map: degenerate extent");
    }
    for (const Building& b : buildings_) {
        if (!(b.footprint_min.x < b.footprint_max.x && b.footprint_min.y < b.footprint_max.y)) {
            throw std::invalid_argument("city map: degenerate building footprint");
        }
        if (!(b.height > 0.0)) {
            throw std::invalid_argument("city map: building height must be positive");
        }
        if (b.footprint_min.x < extent_min_.x || b.footprint_min.y < extent_min_.y ||
            b.footprint_max.x > extent_max_.x || b.footprint_max.y > extent_max_.y) {
            throw std::invalid_argument("city map: building footprint outside extent");
        }
    }
    for (std::size_t i = 0; i < buildings_.size() && !has_overlaps_; ++i) {
        for (std::size_t j = i + 1; j < buildings_.size(); ++j) {
            if (footprints_overlap(buildings_[i], buildings_[j])) {
                has_overlaps_ = true;
                break;
            }
        }
    }
}

bool CityMap::contains(const Vec2& p) const {
    return p.x >= extent_min_.x && p.x <= extent_max_.x && p.y >= extent_min_.y &&
           p.y <= extent_max_.y;
}

double CityMap::extent_diagonal() const {
    return distance(extent_min_, extent_max_);
}

bool CityMap::segment_clear(const Vec3& a, const Vec3& b) const {
    const Vec3 d = b - a;
    for (const Building& bld : buildings_) {
        double t0 = 0.0;
        double t1 = 1.0;
        if (!clip_axis(a.x, d.x, bld.footprint_min.x, bld.footprint_max.x, t0, t1)) continue;
        if (!clip_axis(a.y, d.y, bld.footprint_min.y, bld.footprint_max.y, t0, t1)) continue;
        // z is linear in t, so its minimum over the crossed interval sits at
        // an endpoint. Blockage requires dropping strictly below the roof.
        const double z_lo = std::min(a.z + t0 * d.z, a.z + t1 * d.z);
        if (z_lo < bld.height) return false;
    }
    return true;
}

bool CityMap::is_los(const Vec3& uav, const Vec2& user, double user_height) const {
    if (!(uav.z > 0.0)) {
        throw std::domain_error("is_los: UAV altitude must be positive");
    }
    if (!contains(uav.xy()) || !contains(user)) {
        throw std::domain_error("is_los: point outside map extent");
    }
    return segment_clear(uav, {user.x, user.y, user_height});
}

std::vector<std::uint8_t> CityMap::classify(std::span<const UavPose> poses, const Vec2& user,
                                            double user_height) const {
    std::vector<std::uint8_t> labels(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        labels[i] = is_los(poses[i].position, user, user_height) ? 1 : 0;
    }
    return labels;
}

double default_height_scale() {
    // Rayleigh mean is scale * sqrt(pi/2); solve for a 15 m mean.
    return 15.0 / std::sqrt(std::numbers::pi / 2.0);
}

CityMap generate_city(Vec2 extent_min, Vec2 extent_max, int building_count, double height_scale,
                      std::uint64_t seed) {
    if (building_count < 0) throw std::invalid_argument("generate_city: negative building count");
    if (!(height_scale > 0.0)) throw std::invalid_argument("generate_city: height scale must be positive");
    if (!(extent_min.x < extent_max.x && extent_min.y < extent_max.y)) {
        throw std::invalid_argument("generate_city: degenerate extent");
    }
    if (building_count == 0) return CityMap(extent_min, extent_max, {});

    const double width = extent_max.x - extent_min.x;
    const double height = extent_max.y - extent_min.y;

    int cols = std::max(1, static_cast<int>(std::lround(
                               std::sqrt(static_cast<double>(building_count) * width / height))));
    int rows = (building_count + cols - 1) / cols;
    while (cols * rows < building_count) ++rows;

    const double cell_w = width / cols;
    const double cell_h = height / rows;
    // 15% street margin on each side of a cell; the remaining interior must
    // still hold a useful footprint.
    const double interior_w = 0.7 * cell_w;
    const double interior_h = 0.7 * cell_h;
    constexpr double kMinFootprint = 4.0;
    if (interior_w < kMinFootprint || interior_h < kMinFootprint) {
        throw std::invalid_argument("generate_city: building count infeasible for extent");
    }

    Rng rng(seed);
    std::vector<int> cells(static_cast<std::size_t>(cols) * rows);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
    std::shuffle(cells.begin(), cells.end(), rng.engine());
    cells.resize(building_count);
    std::sort(cells.begin(), cells.end());

    std::vector<Building> buildings;
    buildings.reserve(building_count);
    for (int cell : cells) {
        const int cx = cell % cols;
        const int cy = cell / cols;
        const double ix = extent_min.x + cx * cell_w + 0.15 * cell_w;
        const double iy = extent_min.y + cy * cell_h + 0.15 * cell_h;

        const double w = rng.uniform(std::min(kMinFootprint, interior_w), interior_w);
        const double h = rng.uniform(std::min(kMinFootprint, interior_h), interior_h);
        const double ox = rng.uniform(0.0, interior_w - w);
        const double oy = rng.uniform(0.0, interior_h - h);
        const double roof = std::clamp(rng.rayleigh(height_scale), 5.0, 40.0);

        buildings.push_back({{ix + ox, iy + oy}, {ix + ox + w, iy + oy + h}, roof});
    }
    return CityMap(extent_min, extent_max, std::move(buildings));
}

CityMap load_city(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_city: cannot open " + path);
    nlohmann::json j;
    in >> j;

    const auto& ext = j.at("extent");
    Vec2 lo{ext.at(0).at(0).get<double>(), ext.at(0).at(1).get<double>()};
    Vec2 hi{ext.at(1).at(0).get<double>(), ext.at(1).at(1).get<double>()};

    std::vector<Building> buildings;
    for (const auto& jb : j.at("buildings")) {
        Building b;
        b.footprint_min = {jb.at("min").at(0).get<double>(), jb.at("min").at(1).get<double>()};
        b.footprint_max = {jb.at("max").at(0).get<double>(), jb.at("max").at(1).get<double>()};
        b.height = jb.at("height").get<double>();
        buildings.push_back(b);
    }
    CityMap map(lo, hi, std::move(buildings));
    if (map.has_overlaps()) {
        std::cerr << "warning: " << path << " contains overlapping building footprints\n";
    }
    return map;
}

void save_city(const CityMap& map, const std::string& path) {
    nlohmann::json j;
    j["extent"] = {{map.extent_min().x, map.extent_min().y},
                   {map.extent_max().x, map.extent_max().y}};
    j["buildings"] = nlohmann::json::array();
    for (const Building& b : map.buildings()) {
        j["buildings"].push_back({{"min", {b.footprint_min.x, b.footprint_min.y}},
                                  {"max", {b.footprint_max.x, b.footprint_max.y}},
                                  {"height", b.height}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_city: cannot open " + path);
    out << j.dump(2) << '\n';
}

}  // namespace uavloc
