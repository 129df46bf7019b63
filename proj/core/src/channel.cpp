#include "uavloc/channel.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "uavloc/rng.hpp"

namespace uavloc {

double path_loss(const PathLossParams& params, Segment z, double d) {
    if (!(d > 0.0)) throw std::domain_error("path_loss: distance must be positive");
    return params.beta(z) - 10.0 * params.alpha(z) * std::log10(d);
}

double gain_from_angles(double elevation, double azimuth_plus_heading) {
    return 15.0 * (std::abs(std::cos(elevation)) + 2.0 * std::abs(std::sin(azimuth_plus_heading)));
}

double true_antenna_gain(const UavPose& pose, const Vec2& user, double user_height) {
    const Vec3 delta = pose.position - Vec3{user.x, user.y, user_height};
    const double d = delta.norm();
    if (d == 0.0) throw std::domain_error("true_antenna_gain: coincident UAV and user positions");
    const double elevation = std::asin(delta.z / d);
    const double azimuth = std::atan2(delta.x, delta.y);
    return gain_from_angles(elevation, azimuth + pose.heading);
}

SynthesizedData synthesize_dataset(const CityMap& map, const PathLossParams& params,
                                   std::span<const Vec2> users, std::span<const UavPose> poses,
                                   std::uint64_t seed, const SynthesisOptions& opts) {
    for (const Vec2& u : users) {
        if (!map.contains(u)) throw std::domain_error("synthesize_dataset: user outside map extent");
    }

    SynthesizedData data;
    data.users.assign(users.begin(), users.end());
    data.measurements.reserve(users.size() * poses.size());
    data.los_labels.reserve(users.size() * poses.size());

    Rng rng(seed);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const UavPose& pose = poses[i];
        for (std::size_t k = 0; k < users.size(); ++k) {
            const bool los = map.is_los(pose.position, users[k], opts.user_height);
            const Segment z = los ? Segment::Los : Segment::Nlos;
            const double d =
                distance(pose.position, Vec3{users[k].x, users[k].y, opts.user_height});
            double g = path_loss(params, z, d);
            if (opts.gain_scale != 0.0) {
                g += opts.gain_scale * true_antenna_gain(pose, users[k], opts.user_height);
            }
            // Shadowing is i.i.d. across (n, k); one generator, fixed order.
            const double eta = rng.normal(0.0, std::sqrt(params.sigma2(z)));
            g += opts.noise_scale * eta;

            data.measurements.push_back({static_cast<int>(i) + 1, static_cast<int>(k), pose, g});
            data.los_labels.push_back(los ? 1 : 0);
        }
    }
    return data;
}

std::vector<UavPose> random_poses(const Vec2& extent_min, const Vec2& extent_max, int count,
                                  double alt_min, double alt_max, std::uint64_t seed) {
    if (count < 0) throw std::invalid_argument("random_poses: negative count");
    if (!(alt_min > 0.0) || alt_max < alt_min) {
        throw std::invalid_argument("random_poses: bad altitude band");
    }
    Rng rng(seed);
    std::vector<UavPose> poses;
    poses.reserve(count);
    for (int i = 0; i < count; ++i) {
        UavPose p;
        p.position = {rng.uniform(extent_min.x, extent_max.x),
                      rng.uniform(extent_min.y, extent_max.y), rng.uniform(alt_min, alt_max)};
        p.heading = wrap_angle(rng.uniform(-M_PI, M_PI));
        poses.push_back(p);
    }
    return poses;
}

std::vector<Vec2> random_users(const CityMap& map, int count, std::uint64_t seed,
                               bool allow_in_buildings) {
    if (count < 0) throw std::invalid_argument("random_users: negative count");
    Rng rng(seed);
    std::vector<Vec2> users;
    users.reserve(count);
    while (static_cast<int>(users.size()) < count) {
        Vec2 u{rng.uniform(map.extent_min().x, map.extent_max().x),
               rng.uniform(map.extent_min().y, map.extent_max().y)};
        if (!allow_in_buildings) {
            bool inside = false;
            for (const Building& b : map.buildings()) {
                if (u.x >= b.footprint_min.x && u.x <= b.footprint_max.x &&
                    u.y >= b.footprint_min.y && u.y <= b.footprint_max.y) {
                    inside = true;
                    break;
                }
            }
            if (inside) continue;
        }
        users.push_back(u);
    }
    return users;
}

void save_measurements(std::span<const Measurement> measurements, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_measurements: cannot open " + path);
    for (const Measurement& m : measurements) {
        nlohmann::json j{{"n", m.n},
                         {"k", m.k},
                         {"pos", {m.pose.position.x, m.pose.position.y, m.pose.position.z}},
                         {"psi", m.pose.heading},
                         {"g", m.g}};
        out << j.dump() << '\n';
    }
}

std::vector<Measurement> load_measurements(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_measurements: cannot open " + path);
    std::vector<Measurement> measurements;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Measurement m;
        m.n = j.at("n").get<int>();
        m.k = j.at("k").get<int>();
        m.pose.position = {j.at("pos").at(0).get<double>(), j.at("pos").at(1).get<double>(),
                           j.at("pos").at(2).get<double>()};
        m.pose.heading = wrap_angle(j.at("psi").get<double>());
        m.g = j.at("g").get<double>();
        if (m.n < 1) throw std::runtime_error("load_measurements: time index must be >= 1");
        if (!std::isfinite(m.g)) throw std::runtime_error("load_measurements: non-finite RSS");
        measurements.push_back(m);
    }
    return measurements;
}

void save_truth(const SynthesizedData& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_truth: cannot open " + path);
    for (std::size_t i = 0; i < data.measurements.size(); ++i) {
        const Measurement& m = data.measurements[i];
        const Vec2& u = data.users.at(m.k);
        nlohmann::json j{{"n", m.n},
                         {"k", m.k},
                         {"los", static_cast<int>(data.los_labels[i])},
                         {"user", {u.x, u.y}}};
        out << j.dump() << '\n';
    }
}

std::vector<TruthRecord> load_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_truth: cannot open " + path);
    std::vector<TruthRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        TruthRecord r;
        r.n = j.at("n").get<int>();
        r.k = j.at("k").get<int>();
        r.los = static_cast<std::uint8_t>(j.at("los").get<int>());
        r.user = {j.at("user").at(0).get<double>(), j.at("user").at(1).get<double>()};
        records.push_back(r);
    }
    return records;
}

}  // namespace uavloc
