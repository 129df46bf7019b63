#include "uavloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "uavloc/netgain.hpp"
#include "uavloc/rng.hpp"

namespace uavloc {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Stream extraction cannot read "nan"/"inf", which fmt() emits for failed
// localizations, so numeric CSV fields go through strtod instead.
double parse_double(const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
        throw std::runtime_error("malformed numeric field '" + tok + "'");
    }
    return v;
}

PoseSamplingSpec::Pattern pattern_from_string(const std::string& s) {
    if (s == "random") return PoseSamplingSpec::Pattern::Random;
    if (s == "lawnmower") return PoseSamplingSpec::Pattern::Lawnmower;
    throw std::invalid_argument("config: unknown pose pattern '" + s + "'");
}

std::string pattern_to_string(PoseSamplingSpec::Pattern p) {
    return p == PoseSamplingSpec::Pattern::Random ? "random" : "lawnmower";
}

PoseSamplingSpec poses_from_json(const nlohmann::json& j) {
    PoseSamplingSpec s;
    if (j.contains("pattern")) s.pattern = pattern_from_string(j.at("pattern").get<std::string>());
    if (j.contains("count")) s.count = j.at("count").get<int>();
    if (j.contains("altitude")) {
        s.altitude_min = j.at("altitude").at(0).get<double>();
        s.altitude_max = j.at("altitude").at(1).get<double>();
    }
    return s;
}

nlohmann::json poses_to_json(const PoseSamplingSpec& s) {
    return {{"pattern", pattern_to_string(s.pattern)},
            {"count", s.count},
            {"altitude", {s.altitude_min, s.altitude_max}}};
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json map;
    if (!cfg.map.path.empty()) {
        map["path"] = cfg.map.path;
    } else {
        map["extent"] = {{cfg.map.extent_min.x, cfg.map.extent_min.y},
                         {cfg.map.extent_max.x, cfg.map.extent_max.y}};
        map["buildings"] = cfg.map.buildings;
        map["height_scale"] = cfg.map.height_scale;
    }
    return {{"map", map},
            {"channel",
             {{"alpha_los", cfg.channel.alpha_los},
              {"beta_los", cfg.channel.beta_los},
              {"sigma2_los", cfg.channel.sigma2_los},
              {"alpha_nlos", cfg.channel.alpha_nlos},
              {"beta_nlos", cfg.channel.beta_nlos},
              {"sigma2_nlos", cfg.channel.sigma2_nlos}}},
            {"train", {{"users", cfg.train_users}, {"poses", poses_to_json(cfg.train_poses)}}},
            {"test", {{"users", cfg.test_users}, {"poses", poses_to_json(cfg.test_poses)}}},
            {"trials", cfg.trials},
            {"user_height", cfg.user_height},
            {"gain_scale", cfg.gain_scale},
            {"noise_scale", cfg.noise_scale},
            {"gain_train",
             {{"learning_rate", cfg.gain_train.learning_rate},
              {"batch_size", cfg.gain_train.batch_size},
              {"epochs", cfg.gain_train.epochs},
              {"val_fraction", cfg.gain_train.val_fraction},
              {"patience", cfg.gain_train.patience}}},
            {"pso",
             {{"particles", cfg.pso.particles},
              {"iterations", cfg.pso.iterations},
              {"inertia", cfg.pso.inertia},
              {"cognitive", cfg.pso.cognitive},
              {"social", cfg.pso.social},
              {"velocity_cap", cfg.pso.velocity_cap},
              {"use_classification_cache", cfg.pso.use_classification_cache}}},
            {"seed", cfg.seed}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("map")) {
        const nlohmann::json& m = j.at("map");
        if (m.contains("path")) cfg.map.path = m.at("path").get<std::string>();
        if (m.contains("extent")) {
            cfg.map.extent_min = {m.at("extent").at(0).at(0).get<double>(),
                                  m.at("extent").at(0).at(1).get<double>()};
            cfg.map.extent_max = {m.at("extent").at(1).at(0).get<double>(),
                                  m.at("extent").at(1).at(1).get<double>()};
        }
        if (m.contains("buildings")) cfg.map.buildings = m.at("buildings").get<int>();
        if (m.contains("height_scale")) cfg.map.height_scale = m.at("height_scale").get<double>();
    }
    if (j.contains("channel")) {
        const nlohmann::json& c = j.at("channel");
        if (c.contains("alpha_los")) cfg.channel.alpha_los = c.at("alpha_los").get<double>();
        if (c.contains("beta_los")) cfg.channel.beta_los = c.at("beta_los").get<double>();
        if (c.contains("sigma2_los")) cfg.channel.sigma2_los = c.at("sigma2_los").get<double>();
        if (c.contains("alpha_nlos")) cfg.channel.alpha_nlos = c.at("alpha_nlos").get<double>();
        if (c.contains("beta_nlos")) cfg.channel.beta_nlos = c.at("beta_nlos").get<double>();
        if (c.contains("sigma2_nlos")) cfg.channel.sigma2_nlos = c.at("sigma2_nlos").get<double>();
    }
    if (j.contains("train")) {
        if (j.at("train").contains("users")) cfg.train_users = j.at("train").at("users").get<int>();
        if (j.at("train").contains("poses"))
            cfg.train_poses = poses_from_json(j.at("train").at("poses"));
    }
    if (j.contains("test")) {
        if (j.at("test").contains("users")) cfg.test_users = j.at("test").at("users").get<int>();
        if (j.at("test").contains("poses"))
            cfg.test_poses = poses_from_json(j.at("test").at("poses"));
    }
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    if (j.contains("user_height")) cfg.user_height = j.at("user_height").get<double>();
    if (j.contains("gain_scale")) cfg.gain_scale = j.at("gain_scale").get<double>();
    if (j.contains("noise_scale")) cfg.noise_scale = j.at("noise_scale").get<double>();
    if (j.contains("gain_train")) {
        const nlohmann::json& g = j.at("gain_train");
        if (g.contains("learning_rate"))
            cfg.gain_train.learning_rate = g.at("learning_rate").get<double>();
        if (g.contains("batch_size")) cfg.gain_train.batch_size = g.at("batch_size").get<int>();
        if (g.contains("epochs")) cfg.gain_train.epochs = g.at("epochs").get<int>();
        if (g.contains("val_fraction"))
            cfg.gain_train.val_fraction = g.at("val_fraction").get<double>();
        if (g.contains("patience")) cfg.gain_train.patience = g.at("patience").get<int>();
    }
    if (j.contains("pso")) {
        const nlohmann::json& p = j.at("pso");
        if (p.contains("particles")) cfg.pso.particles = p.at("particles").get<int>();
        if (p.contains("iterations")) cfg.pso.iterations = p.at("iterations").get<int>();
        if (p.contains("inertia")) cfg.pso.inertia = p.at("inertia").get<double>();
        if (p.contains("cognitive")) cfg.pso.cognitive = p.at("cognitive").get<double>();
        if (p.contains("social")) cfg.pso.social = p.at("social").get<double>();
        if (p.contains("velocity_cap")) cfg.pso.velocity_cap = p.at("velocity_cap").get<double>();
        if (p.contains("use_classification_cache"))
            cfg.pso.use_classification_cache = p.at("use_classification_cache").get<bool>();
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (train_users < 1 || test_users < 1) {
        throw std::invalid_argument("config: user counts must be >= 1");
    }
    if (train_poses.count < 1 || test_poses.count < 1) {
        throw std::invalid_argument("config: pose counts must be >= 1");
    }
    if (trials < 1) throw std::invalid_argument("config: trial count must be >= 1");
    if (train_poses.altitude_min <= 0.0 || train_poses.altitude_max < train_poses.altitude_min ||
        test_poses.altitude_min <= 0.0 || test_poses.altitude_max < test_poses.altitude_min) {
        throw std::invalid_argument("config: altitude band must be positive and ordered");
    }
    if (noise_scale < 0.0) throw std::invalid_argument("config: noise scale must be >= 0");
    pso.validate();
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_experiment_config: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

void save_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_experiment_config: cannot open " + path);
    out << config_to_json(cfg).dump(2) << '\n';
}

CdfCurve make_cdf(std::span<const double> errors) {
    if (errors.empty()) throw std::invalid_argument("make_cdf: empty sample set");
    std::vector<double> sorted(errors.begin(), errors.end());
    for (double e : sorted) {
        if (!(e >= 0.0)) throw std::invalid_argument("make_cdf: samples must be non-negative");
    }
    std::sort(sorted.begin(), sorted.end());
    CdfCurve curve;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        curve.errors.push_back(sorted[i]);
        curve.probs.push_back(static_cast<double>(i + 1) / n);
    }
    return curve;
}

double quantile(const CdfCurve& curve, double p) {
    if (curve.errors.empty()) throw std::invalid_argument("quantile: empty curve");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0,1]");
    for (std::size_t i = 0; i < curve.probs.size(); ++i) {
        if (curve.probs[i] >= p) return curve.errors[i];
    }
    return curve.errors.back();
}

CityMap load_or_generate_map(const MapSpec& spec, std::uint64_t seed) {
    if (!spec.path.empty()) return load_city(spec.path);
    return generate_city(spec.extent_min, spec.extent_max, spec.buildings, spec.height_scale,
                         seed);
}

std::vector<UavPose> make_poses(const PoseSamplingSpec& spec, const CityMap& map,
                                std::uint64_t seed) {
    if (spec.pattern == PoseSamplingSpec::Pattern::Random) {
        return random_poses(map.extent_min(), map.extent_max(), spec.count, spec.altitude_min,
                            spec.altitude_max, seed);
    }
    // Boustrophedon sweep at the band's middle altitude; heading follows the
    // travel direction so the gain pattern actually rotates along the path.
    std::vector<UavPose> poses;
    poses.reserve(static_cast<std::size_t>(spec.count));
    const int rows = std::max(1, static_cast<int>(std::lround(std::sqrt(spec.count))));
    const int cols = (spec.count + rows - 1) / rows;
    const Vec2 lo = map.extent_min();
    const Vec2 hi{map.extent_max().x, map.extent_max().y};
    const double mx = 0.05 * (hi.x - lo.x);
    const double my = 0.05 * (hi.y - lo.y);
    const double z = 0.5 * (spec.altitude_min + spec.altitude_max);
    for (int r = 0; r < rows && static_cast<int>(poses.size()) < spec.count; ++r) {
        const double y =
            rows == 1 ? 0.5 * (lo.y + hi.y)
                      : lo.y + my + (hi.y - lo.y - 2.0 * my) * static_cast<double>(r) /
                                        static_cast<double>(rows - 1);
        for (int c = 0; c < cols && static_cast<int>(poses.size()) < spec.count; ++c) {
            const int cc = (r % 2 == 0) ? c : cols - 1 - c;
            const double x =
                cols == 1 ? 0.5 * (lo.x + hi.x)
                          : lo.x + mx + (hi.x - lo.x - 2.0 * mx) * static_cast<double>(cc) /
                                            static_cast<double>(cols - 1);
            const double heading =
                (r % 2 == 0) ? 0.5 * std::numbers::pi : -0.5 * std::numbers::pi;
            poses.push_back({{x, y, z}, heading});
        }
    }
    return poses;
}

int worker_count() {
    if (const char* env = std::getenv("UAVLOC_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<int>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void save_errors_csv(std::span<const TrialUserError> rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_errors_csv: cannot open " + path);
    out << "trial,user,error_hybrid,error_baseline\n";
    for (const TrialUserError& r : rows) {
        out << r.trial << ',' << r.user << ',' << fmt(r.error_hybrid) << ','
            << fmt(r.error_baseline) << '\n';
    }
}

std::vector<TrialUserError> load_errors_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_errors_csv: cannot open " + path);
    std::vector<TrialUserError> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TrialUserError r;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::string eh, eb;
        ss >> r.trial >> r.user >> eh >> eb;
        if (!ss) throw std::runtime_error("load_errors_csv: malformed row in " + path);
        r.error_hybrid = parse_double(eh);
        r.error_baseline = parse_double(eb);
        rows.push_back(r);
    }
    return rows;
}

void save_cdf_csv(const CdfCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_cdf_csv: cannot open " + path);
    out << "error_m,probability\n";
    for (std::size_t i = 0; i < curve.errors.size(); ++i) {
        out << fmt(curve.errors[i]) << ',' << fmt(curve.probs[i]) << '\n';
    }
}

CdfCurve load_cdf_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_cdf_csv: cannot open " + path);
    CdfCurve curve;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double e = 0.0, p = 0.0;
        ss >> e >> p;
        if (!ss) throw std::runtime_error("load_cdf_csv: malformed row in " + path);
        curve.errors.push_back(e);
        curve.probs.push_back(p);
    }
    return curve;
}

void save_traces_csv(std::span<const ChannelTraceRow> rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_traces_csv: cannot open " + path);
    out << "n,k,los,dist_m,g_measured,g_hybrid,g_baseline\n";
    for (const ChannelTraceRow& r : rows) {
        out << r.n << ',' << r.k << ',' << static_cast<int>(r.los) << ',' << fmt(r.dist) << ','
            << fmt(r.g_measured) << ',' << fmt(r.g_hybrid) << ',' << fmt(r.g_baseline) << '\n';
    }
}

std::vector<ChannelTraceRow> load_traces_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_traces_csv: cannot open " + path);
    std::vector<ChannelTraceRow> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        ChannelTraceRow r;
        int los = 0;
        ss >> r.n >> r.k >> los >> r.dist >> r.g_measured >> r.g_hybrid >> r.g_baseline;
        if (!ss) throw std::runtime_error("load_traces_csv: malformed row in " + path);
        r.los = static_cast<std::uint8_t>(los);
        rows.push_back(r);
    }
    return rows;
}

namespace {

struct TrialOutcome {
    std::vector<TrialUserError> errors;
    int failed_hybrid = 0;
    int failed_baseline = 0;
    std::vector<ChannelTraceRow> traces;
};

TrialOutcome run_trial(const ExperimentConfig& cfg, const CityMap& map,
                       const HybridChannelModel& hybrid, const HybridChannelModel& baseline,
                       int trial, bool keep_traces) {
    const std::uint64_t trial_seed =
        derive_seed(cfg.seed, "trial", static_cast<std::uint64_t>(trial));
    const std::vector<Vec2> users =
        random_users(map, cfg.test_users, derive_seed(trial_seed, "users"));
    const std::vector<UavPose> poses =
        make_poses(cfg.test_poses, map, derive_seed(trial_seed, "poses"));
    SynthesisOptions opts;
    opts.user_height = cfg.user_height;
    opts.gain_scale = cfg.gain_scale;
    opts.noise_scale = cfg.noise_scale;
    const SynthesizedData data =
        synthesize_dataset(map, cfg.channel, users, poses, derive_seed(trial_seed, "data"), opts);

    const std::vector<std::vector<Measurement>> groups = group_by_user(data.measurements);
    PsoConfig pso = cfg.pso;
    pso.user_height = cfg.user_height;
    pso.seed = derive_seed(trial_seed, "pso");
    // Both models consume the exact same measurements and PSO seed so each
    // user is a paired comparison.
    const std::vector<LocalizationResult> res_h = localize_all(hybrid, map, groups, pso);
    const std::vector<LocalizationResult> res_b = localize_all(baseline, map, groups, pso);

    TrialOutcome out;
    out.errors.reserve(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        TrialUserError e;
        e.trial = trial;
        e.user = res_h[i].user;
        const Vec2 truth = users[static_cast<std::size_t>(res_h[i].user)];
        e.error_hybrid = res_h[i].ok() ? distance(res_h[i].estimate, truth)
                                       : std::numeric_limits<double>::quiet_NaN();
        e.error_baseline = res_b[i].ok() ? distance(res_b[i].estimate, truth)
                                         : std::numeric_limits<double>::quiet_NaN();
        if (!res_h[i].ok()) ++out.failed_hybrid;
        if (!res_b[i].ok()) ++out.failed_baseline;
        out.errors.push_back(e);
    }

    if (keep_traces) {
        out.traces.reserve(data.measurements.size());
        for (const Measurement& m : data.measurements) {
            ChannelTraceRow row;
            row.n = m.n;
            row.k = m.k;
            const std::size_t idx = static_cast<std::size_t>(&m - data.measurements.data());
            row.los = data.los_labels[idx];
            const Vec2 truth = users[static_cast<std::size_t>(m.k)];
            const Segment z = segment_from_label(row.los);
            row.dist =
                distance(m.pose.position, Vec3{truth.x, truth.y, cfg.user_height});
            row.g_measured = m.g;
            row.g_hybrid = predict(hybrid, m.pose, truth, z, cfg.user_height);
            row.g_baseline = predict(baseline, m.pose, truth, z, cfg.user_height);
            out.traces.push_back(row);
        }
    }
    return out;
}

template <typename F>
auto stage(const char* name, F&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    const auto path = [&](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };
    save_experiment_config(cfg, path("config_echo.json"));

    const CityMap map = stage("map", [&] {
        CityMap m = load_or_generate_map(cfg.map, derive_seed(cfg.seed, "map"));
        save_city(m, path("map.json"));
        return m;
    });

    const SynthesizedData train_data = stage("train-data", [&] {
        const std::vector<Vec2> users =
            random_users(map, cfg.train_users, derive_seed(cfg.seed, "train-users"));
        const std::vector<UavPose> poses =
            make_poses(cfg.train_poses, map, derive_seed(cfg.seed, "train-poses"));
        SynthesisOptions opts;
        opts.user_height = cfg.user_height;
        opts.gain_scale = cfg.gain_scale;
        opts.noise_scale = cfg.noise_scale;
        return synthesize_dataset(map, cfg.channel, users, poses,
                                  derive_seed(cfg.seed, "train-data"), opts);
    });

    ExperimentReport report;
    const TrainingSet train = stage("pathloss-fit", [&] {
        TrainingSet t = TrainingSet::build(map, train_data.measurements, train_data.users,
                                           cfg.user_height);
        report.fit = fit_pathloss(t, cfg.channel.sigma2_los, cfg.channel.sigma2_nlos);
        save_pathloss_fit(report.fit, path("pathloss_fit.json"));
        return t;
    });

    stage("gain-train", [&] {
        GainTrainOptions opts = cfg.gain_train;
        opts.seed = derive_seed(cfg.seed, "gain-train");
        report.training = train_gain(train, report.fit.params, opts);
        save_train_log(report.training.log, path("gain_training_log.csv"));
        CheckpointMeta meta;
        meta.trained_on = std::to_string(train.records().size()) + " records";
        meta.seed = opts.seed;
        meta.epochs = report.training.best_epoch;
        save_network(report.training.net, meta, path("gain_checkpoint.json"));
        return 0;
    });

    const HybridChannelModel hybrid =
        HybridChannelModel::with_network(report.fit.params, report.training.net);
    const HybridChannelModel baseline = HybridChannelModel::baseline(report.fit.params);

    stage("trials", [&] {
        std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
        std::atomic<int> next{0};
        std::vector<std::exception_ptr> failures(static_cast<std::size_t>(cfg.trials));
        const int workers = std::min(worker_count(), cfg.trials);
        auto body = [&] {
            for (int i = next.fetch_add(1); i < cfg.trials; i = next.fetch_add(1)) {
                try {
                    outcomes[static_cast<std::size_t>(i)] =
                        run_trial(cfg, map, hybrid, baseline, i, i == 0);
                } catch (...) {
                    failures[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        };
        if (workers <= 1) {
            body();
        } else {
            std::vector<std::thread> threads;
            threads.reserve(static_cast<std::size_t>(workers));
            for (int w = 0; w < workers; ++w) threads.emplace_back(body);
            for (std::thread& t : threads) t.join();
        }
        for (const std::exception_ptr& p : failures) {
            if (p) std::rethrow_exception(p);
        }
        for (TrialOutcome& o : outcomes) {
            report.errors.insert(report.errors.end(), o.errors.begin(), o.errors.end());
            report.failed_hybrid += o.failed_hybrid;
            report.failed_baseline += o.failed_baseline;
            if (!o.traces.empty()) report.traces = std::move(o.traces);
        }
        save_errors_csv(report.errors, path("errors.csv"));
        save_traces_csv(report.traces, path("channel_traces.csv"));
        return 0;
    });

    stage("report", [&] {
        std::vector<double> eh, eb;
        for (const TrialUserError& e : report.errors) {
            if (std::isfinite(e.error_hybrid)) eh.push_back(e.error_hybrid);
            if (std::isfinite(e.error_baseline)) eb.push_back(e.error_baseline);
        }
        if (eh.empty() || eb.empty()) {
            throw std::runtime_error("no successful localizations to summarize");
        }
        report.cdf_hybrid = make_cdf(eh);
        report.cdf_baseline = make_cdf(eb);
        save_cdf_csv(report.cdf_hybrid, path("cdf_hybrid.csv"));
        save_cdf_csv(report.cdf_baseline, path("cdf_baseline.csv"));

        const double med_h = quantile(report.cdf_hybrid, 0.5);
        const double med_b = quantile(report.cdf_baseline, 0.5);
        nlohmann::json summary{
            {"trials", cfg.trials},
            {"users_per_trial", cfg.test_users},
            {"hybrid",
             {{"median_m", med_h},
              {"p80_m", quantile(report.cdf_hybrid, 0.8)},
              {"mean_m",
               std::accumulate(eh.begin(), eh.end(), 0.0) / static_cast<double>(eh.size())},
              {"failed", report.failed_hybrid}}},
            {"baseline",
             {{"median_m", med_b},
              {"p80_m", quantile(report.cdf_baseline, 0.8)},
              {"mean_m",
               std::accumulate(eb.begin(), eb.end(), 0.0) / static_cast<double>(eb.size())},
              {"failed", report.failed_baseline}}},
            {"hybrid_beats_baseline_median", med_h < med_b},
            {"pathloss",
             {{"alpha_los", report.fit.params.alpha_los},
              {"beta_los", report.fit.params.beta_los},
              {"alpha_nlos", report.fit.params.alpha_nlos},
              {"beta_nlos", report.fit.params.beta_nlos}}},
            {"gain_training",
             {{"best_epoch", report.training.best_epoch},
              {"best_val_loss", report.training.best_val_loss},
              {"epochs_run", report.training.log.empty()
                                 ? 0
                                 : report.training.log.back().epoch}}},
            {"seeds",
             {{"map", derive_seed(cfg.seed, "map")},
              {"train_users", derive_seed(cfg.seed, "train-users")},
              {"train_poses", derive_seed(cfg.seed, "train-poses")},
              {"train_data", derive_seed(cfg.seed, "train-data")},
              {"gain_train", derive_seed(cfg.seed, "gain-train")},
              {"trial_0", derive_seed(cfg.seed, "trial", 0)}}}};
        std::ofstream out(path("summary.json"));
        if (!out) throw std::runtime_error("cannot open summary.json");
        out << summary.dump(2) << '\n';
        return 0;
    });

    return report;
}

}  // namespace uavloc
