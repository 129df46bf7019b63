#include "uavloc/pso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "uavloc/rng.hpp"

namespace uavloc {

void PsoConfig::validate() const {
    if (particles < 1) throw std::invalid_argument("pso: particle count must be >= 1");
    if (iterations < 1) throw std::invalid_argument("pso: iteration count must be >= 1");
    if (!(inertia > 0.0) || !(inertia < 1.0)) {
        throw std::invalid_argument("pso: inertia must lie in (0,1)");
    }
    if (!(cognitive >= 0.0) || !(social >= 0.0)) {
        throw std::invalid_argument("pso: acceleration coefficients must be non-negative");
    }
    if (velocity_cap < 0.0) throw std::invalid_argument("pso: velocity cap must be positive");
}

double PsoConfig::resolved_velocity_cap(const CityMap& map) const {
    return velocity_cap > 0.0 ? velocity_cap : 0.1 * map.extent_diagonal();
}

ClassificationCache::ClassificationCache(const CityMap& map, std::span<const UavPose> poses,
                                         double user_height, double cell_size)
    : map_(map),
      poses_(poses.begin(), poses.end()),
      user_height_(user_height),
      cell_size_(cell_size) {
    if (!(cell_size > 0.0)) throw std::invalid_argument("classification cache: cell size must be positive");
}

Vec2 ClassificationCache::cell_center(const Vec2& candidate) const {
    const double ix = std::floor((candidate.x - map_.extent_min().x) / cell_size_);
    const double iy = std::floor((candidate.y - map_.extent_min().y) / cell_size_);
    Vec2 center{map_.extent_min().x + (ix + 0.5) * cell_size_,
                map_.extent_min().y + (iy + 0.5) * cell_size_};
    // Cells straddling the boundary evaluate at a point pulled back inside.
    center.x = std::clamp(center.x, map_.extent_min().x, map_.extent_max().x);
    center.y = std::clamp(center.y, map_.extent_min().y, map_.extent_max().y);
    return center;
}

const std::vector<std::uint8_t>& ClassificationCache::labels(const Vec2& candidate) {
    const auto ix = static_cast<std::int64_t>(
        std::floor((candidate.x - map_.extent_min().x) / cell_size_));
    const auto iy = static_cast<std::int64_t>(
        std::floor((candidate.y - map_.extent_min().y) / cell_size_));
    const std::uint64_t key =
        (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint64_t>(iy & 0xffffffff);
    auto it = cells_.find(key);
    if (it == cells_.end()) {
        it = cells_.emplace(key, map_.classify(poses_, cell_center(candidate), user_height_)).first;
    }
    return it->second;
}

double objective(const HybridChannelModel& model, const CityMap& map,
                 std::span<const Measurement> measurements, const Vec2& candidate,
                 double user_height, ClassificationCache* cache) {
    if (measurements.empty()) throw std::invalid_argument("objective: no measurements");
    if (candidate.x < map.extent_min().x || candidate.x > map.extent_max().x ||
        candidate.y < map.extent_min().y || candidate.y > map.extent_max().y) {
        return std::numeric_limits<double>::infinity();
    }

    std::vector<UavPose> poses(measurements.size());
    for (std::size_t i = 0; i < measurements.size(); ++i) poses[i] = measurements[i].pose;

    std::vector<std::uint8_t> scratch;
    const std::vector<std::uint8_t>* labels;
    if (cache != nullptr) {
        labels = &cache->labels(candidate);
    } else {
        scratch = map.classify(poses, candidate, user_height);
        labels = &scratch;
    }
    if (labels->size() != measurements.size()) {
        throw std::logic_error("objective: classification count mismatch");
    }

    const std::vector<double> gains = model.gain_batch(poses, candidate, user_height);

    const PathLossParams& p = model.pathloss;
    std::size_t n_los = 0;
    double sum = 0.0;
    const Vec3 cand3{candidate.x, candidate.y, user_height};
    for (std::size_t i = 0; i < measurements.size(); ++i) {
        const Segment z = segment_from_label((*labels)[i]);
        if (z == Segment::Los) ++n_los;
        const double d = distance(measurements[i].pose.position, cand3);
        const double r = measurements[i].g - path_loss(p, z, d) - gains[i];
        sum += r * r / p.sigma2(z);
    }
    return std::log(p.sigma2_los / p.sigma2_nlos) * static_cast<double>(n_los) + sum;
}

LocalizationResult localize(const HybridChannelModel& model, const CityMap& map,
                            std::span<const Measurement> measurements, const PsoConfig& cfg) {
    cfg.validate();
    if (measurements.empty()) throw std::invalid_argument("localize: no measurements");

    LocalizationResult result;
    result.user = measurements.front().k;

    std::optional<ClassificationCache> cache;
    if (cfg.use_classification_cache) {
        std::vector<UavPose> poses(measurements.size());
        for (std::size_t i = 0; i < measurements.size(); ++i) poses[i] = measurements[i].pose;
        cache.emplace(map, poses, cfg.user_height);
    }
    auto score = [&](const Vec2& c) {
        return objective(model, map, measurements, c, cfg.user_height,
                         cache ? &*cache : nullptr);
    };

    Rng rng(cfg.seed);
    const Vec2 lo = map.extent_min();
    const Vec2 hi{map.extent_max().x, map.extent_max().y};
    const double cap = cfg.resolved_velocity_cap(map);

    std::vector<Particle> swarm(static_cast<std::size_t>(cfg.particles));
    Vec2 gbest{};
    double gbest_obj = std::numeric_limits<double>::infinity();
    for (Particle& p : swarm) {
        p.position = {rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
        p.velocity = {0.0, 0.0};
        p.best_position = p.position;
        p.best_objective = score(p.position);
        if (p.best_objective < gbest_obj) {
            gbest_obj = p.best_objective;
            gbest = p.best_position;
        }
    }
    if (!std::isfinite(gbest_obj)) {
        result.failure = "localize: no particle produced a finite objective";
        return result;
    }
    result.trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
    result.trace.push_back(gbest_obj);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        // Velocities and positions advance together off the previous
        // iteration's global best; objective evaluations are independent and
        // the best update below is the lone synchronization point.
        std::vector<double> objectives(swarm.size());
        for (std::size_t j = 0; j < swarm.size(); ++j) {
            Particle& p = swarm[j];
            const double r1x = rng.uniform(0.0, 1.0), r1y = rng.uniform(0.0, 1.0);
            const double r2x = rng.uniform(0.0, 1.0), r2y = rng.uniform(0.0, 1.0);
            p.velocity.x = cfg.inertia * p.velocity.x +
                           cfg.cognitive * r1x * (p.best_position.x - p.position.x) +
                           cfg.social * r2x * (gbest.x - p.position.x);
            p.velocity.y = cfg.inertia * p.velocity.y +
                           cfg.cognitive * r1y * (p.best_position.y - p.position.y) +
                           cfg.social * r2y * (gbest.y - p.position.y);
            const double speed = p.velocity.norm();
            if (speed > cap) {
                p.velocity.x *= cap / speed;
                p.velocity.y *= cap / speed;
            }
            p.position.x = std::clamp(p.position.x + p.velocity.x, lo.x, hi.x);
            p.position.y = std::clamp(p.position.y + p.velocity.y, lo.y, hi.y);
            objectives[j] = score(p.position);
        }
        for (std::size_t j = 0; j < swarm.size(); ++j) {
            if (objectives[j] < swarm[j].best_objective) {
                swarm[j].best_objective = objectives[j];
                swarm[j].best_position = swarm[j].position;
            }
            if (objectives[j] < gbest_obj) {
                gbest_obj = objectives[j];
                gbest = swarm[j].position;
            }
        }
        result.trace.push_back(gbest_obj);
    }

    result.estimate = gbest;
    // Reported objective is recomputed without the cache so a coarse cache
    // cell can never distort the final figure.
    result.objective = objective(model, map, measurements, gbest, cfg.user_height, nullptr);
    return result;
}

std::vector<std::vector<Measurement>> group_by_user(std::span<const Measurement> measurements) {
    std::vector<int> users;
    for (const Measurement& m : measurements) {
        if (std::find(users.begin(), users.end(), m.k) == users.end()) users.push_back(m.k);
    }
    std::sort(users.begin(), users.end());
    std::vector<std::vector<Measurement>> groups(users.size());
    for (const Measurement& m : measurements) {
        const auto it = std::lower_bound(users.begin(), users.end(), m.k);
        groups[static_cast<std::size_t>(it - users.begin())].push_back(m);
    }
    return groups;
}

std::vector<LocalizationResult> localize_all(const HybridChannelModel& model, const CityMap& map,
                                             const std::vector<std::vector<Measurement>>& per_user,
                                             const PsoConfig& cfg) {
    std::vector<LocalizationResult> results;
    results.reserve(per_user.size());
    for (const std::vector<Measurement>& group : per_user) {
        if (group.empty()) {
            LocalizationResult r;
            r.failure = "localize: empty measurement group";
            results.push_back(std::move(r));
            continue;
        }
        PsoConfig per_cfg = cfg;
        per_cfg.seed = derive_seed(cfg.seed, "user", static_cast<std::uint64_t>(group.front().k));
        try {
            results.push_back(localize(model, map, group, per_cfg));
        } catch (const std::exception& e) {
            LocalizationResult r;
            r.user = group.front().k;
            r.failure = e.what();
            results.push_back(std::move(r));
        }
    }
    return results;
}

void save_localization_results(std::span<const LocalizationResult> results,
                               const std::string& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LocalizationResult& r : results) {
        nlohmann::json j{{"user", r.user},
                         {"estimate", {r.estimate.x, r.estimate.y}},
                         {"objective", r.objective},
                         {"trace", r.trace}};
        if (r.error_m) j["error_m"] = *r.error_m;
        if (r.failure) j["failure"] = *r.failure;
        arr.push_back(std::move(j));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_localization_results: cannot open " + path);
    out << arr.dump(2) << '\n';
}

std::vector<LocalizationResult> load_localization_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_localization_results: cannot open " + path);
    nlohmann::json arr;
    in >> arr;
    std::vector<LocalizationResult> results;
    for (const nlohmann::json& j : arr) {
        LocalizationResult r;
        r.user = j.at("user").get<int>();
        r.estimate = {j.at("estimate").at(0).get<double>(), j.at("estimate").at(1).get<double>()};
        r.objective = j.at("objective").get<double>();
        r.trace = j.at("trace").get<std::vector<double>>();
        if (j.contains("error_m")) r.error_m = j.at("error_m").get<double>();
        if (j.contains("failure")) r.failure = j.at("failure").get<std::string>();
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace uavloc
