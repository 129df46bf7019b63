// Command-line front end: each subcommand runs one pipeline stage against a
// JSON config and writes its artifacts into --out. Stage commands compose
// through the path keys (map.path, measurements_path, fit_path, ...) so a
// full run can also be assembled by hand; `evaluate` runs everything.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "uavloc/channel.hpp"
#include "uavloc/citymap.hpp"
#include "uavloc/harness.hpp"
#include "uavloc/learning.hpp"
#include "uavloc/netgain.hpp"
#include "uavloc/pso.hpp"
#include "uavloc/rng.hpp"

namespace {

using namespace uavloc;

struct StageArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    std::string split = "train";
};

std::string out_path(const StageArgs& args, const char* name) {
    return (std::filesystem::path(args.out_dir) / name).string();
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

// Optional artifact-path keys stage commands read from the same config file.
std::string path_key(const nlohmann::json& j, const char* key, bool required) {
    if (j.contains(key)) return j.at(key).get<std::string>();
    if (required) throw std::runtime_error(std::string("config: missing required key '") + key + "'");
    return {};
}

ExperimentConfig load_config(const StageArgs& args) {
    ExperimentConfig cfg = load_experiment_config(args.config_path);
    if (args.seed_override) cfg.seed = *args.seed_override;
    return cfg;
}

std::vector<Vec2> users_from_truth(const std::vector<TruthRecord>& truth) {
    int max_k = -1;
    for (const TruthRecord& t : truth) max_k = std::max(max_k, t.k);
    if (max_k < 0) throw std::runtime_error("truth file has no users");
    std::vector<Vec2> users(static_cast<std::size_t>(max_k) + 1);
    std::vector<bool> seen(users.size(), false);
    for (const TruthRecord& t : truth) {
        users[static_cast<std::size_t>(t.k)] = t.user;
        seen[static_cast<std::size_t>(t.k)] = true;
    }
    for (std::size_t k = 0; k < seen.size(); ++k) {
        if (!seen[k]) throw std::runtime_error("truth file skips user " + std::to_string(k));
    }
    return users;
}

int cmd_gen_map(const StageArgs& args) {
    const ExperimentConfig cfg = load_config(args);
    const CityMap map = load_or_generate_map(cfg.map, derive_seed(cfg.seed, "map"));
    std::filesystem::create_directories(args.out_dir);
    save_city(map, out_path(args, "map.json"));
    std::cout << "wrote " << out_path(args, "map.json") << " (" << map.buildings().size()
              << " buildings)\n";
    return 0;
}

int cmd_gen_data(const StageArgs& args) {
    const ExperimentConfig cfg = load_config(args);
    if (args.split != "train" && args.split != "test") {
        throw std::runtime_error("--split must be 'train' or 'test'");
    }
    const bool train = args.split == "train";
    const CityMap map = load_or_generate_map(cfg.map, derive_seed(cfg.seed, "map"));

    // Seeds line up with what `evaluate` uses internally: the train split
    // reproduces its training set, the test split reproduces trial 0.
    std::uint64_t seed_users, seed_poses, seed_data;
    if (train) {
        seed_users = derive_seed(cfg.seed, "train-users");
        seed_poses = derive_seed(cfg.seed, "train-poses");
        seed_data = derive_seed(cfg.seed, "train-data");
    } else {
        const std::uint64_t trial = derive_seed(cfg.seed, "trial", 0);
        seed_users = derive_seed(trial, "users");
        seed_poses = derive_seed(trial, "poses");
        seed_data = derive_seed(trial, "data");
    }
    const int n_users = train ? cfg.train_users : cfg.test_users;
    const PoseSamplingSpec& pose_spec = train ? cfg.train_poses : cfg.test_poses;
    const std::vector<Vec2> users = random_users(map, n_users, seed_users);
    const std::vector<UavPose> poses = make_poses(pose_spec, map, seed_poses);
    SynthesisOptions opts;
    opts.user_height = cfg.user_height;
    opts.gain_scale = cfg.gain_scale;
    opts.noise_scale = cfg.noise_scale;
    const SynthesizedData data = synthesize_dataset(map, cfg.channel, users, poses, seed_data, opts);

    std::filesystem::create_directories(args.out_dir);
    save_city(map, out_path(args, "map.json"));
    save_measurements(data.measurements, out_path(args, "measurements.jsonl"));
    save_truth(data, out_path(args, "truth.jsonl"));
    std::cout << "wrote " << data.measurements.size() << " measurements for " << users.size()
              << " users (" << args.split << " split)\n";
    return 0;
}

struct LoadedData {
    CityMap map;
    std::vector<Measurement> measurements;
    std::vector<Vec2> users;
};

LoadedData load_stage_inputs(const nlohmann::json& raw, const ExperimentConfig& cfg) {
    MapSpec map_spec = cfg.map;
    if (map_spec.path.empty()) {
        throw std::runtime_error("config: stage commands need map.path (run gen-map first)");
    }
    LoadedData d{load_or_generate_map(map_spec, 0), {}, {}};
    d.measurements = load_measurements(path_key(raw, "measurements_path", true));
    const std::vector<TruthRecord> truth = load_truth(path_key(raw, "truth_path", true));
    d.users = users_from_truth(truth);
    return d;
}

int cmd_fit_pathloss(const StageArgs& args) {
    const nlohmann::json raw = read_json(args.config_path);
    const ExperimentConfig cfg = load_config(args);
    const LoadedData d = load_stage_inputs(raw, cfg);
    const TrainingSet train = TrainingSet::build(d.map, d.measurements, d.users, cfg.user_height);
    const PathLossFit fit = fit_pathloss(train, cfg.channel.sigma2_los, cfg.channel.sigma2_nlos);
    std::filesystem::create_directories(args.out_dir);
    save_pathloss_fit(fit, out_path(args, "pathloss_fit.json"));
    std::cout << "fit: alpha_los=" << fit.params.alpha_los << " beta_los=" << fit.params.beta_los
              << " alpha_nlos=" << fit.params.alpha_nlos
              << " beta_nlos=" << fit.params.beta_nlos << '\n';
    return 0;
}

int cmd_train_gain(const StageArgs& args) {
    const nlohmann::json raw = read_json(args.config_path);
    const ExperimentConfig cfg = load_config(args);
    const LoadedData d = load_stage_inputs(raw, cfg);
    const PathLossFit fit = load_pathloss_fit(path_key(raw, "fit_path", true));
    const TrainingSet train = TrainingSet::build(d.map, d.measurements, d.users, cfg.user_height);
    GainTrainOptions opts = cfg.gain_train;
    opts.seed = derive_seed(cfg.seed, "gain-train");
    const GainTrainResult result = train_gain(train, fit.params, opts);
    std::filesystem::create_directories(args.out_dir);
    save_train_log(result.log, out_path(args, "gain_training_log.csv"));
    CheckpointMeta meta;
    meta.trained_on = std::to_string(train.records().size()) + " records";
    meta.seed = opts.seed;
    meta.epochs = result.best_epoch;
    save_network(result.net, meta, out_path(args, "gain_checkpoint.json"));
    std::cout << "trained to epoch " << result.log.back().epoch << ", best epoch "
              << result.best_epoch << " (val loss " << result.best_val_loss << ")\n";
    return 0;
}

int cmd_localize(const StageArgs& args) {
    const nlohmann::json raw = read_json(args.config_path);
    const ExperimentConfig cfg = load_config(args);
    MapSpec map_spec = cfg.map;
    if (map_spec.path.empty()) {
        throw std::runtime_error("config: stage commands need map.path (run gen-map first)");
    }
    const CityMap map = load_or_generate_map(map_spec, 0);
    const std::vector<Measurement> measurements =
        load_measurements(path_key(raw, "measurements_path", true));
    const PathLossFit fit = load_pathloss_fit(path_key(raw, "fit_path", true));

    HybridChannelModel model = HybridChannelModel::baseline(fit.params);
    const std::string checkpoint = path_key(raw, "checkpoint_path", false);
    if (!checkpoint.empty()) {
        CheckpointMeta meta;
        model = HybridChannelModel::with_network(fit.params, load_network(checkpoint, &meta));
    }

    PsoConfig pso = cfg.pso;
    pso.user_height = cfg.user_height;
    pso.seed = derive_seed(cfg.seed, "pso");
    std::vector<LocalizationResult> results =
        localize_all(model, map, group_by_user(measurements), pso);

    // Truth, when supplied, only annotates errors; it never feeds the solver.
    const std::string truth_path = path_key(raw, "truth_path", false);
    if (!truth_path.empty()) {
        const std::vector<Vec2> users = users_from_truth(load_truth(truth_path));
        for (LocalizationResult& r : results) {
            if (r.ok() && static_cast<std::size_t>(r.user) < users.size()) {
                r.error_m = distance(r.estimate, users[static_cast<std::size_t>(r.user)]);
            }
        }
    }

    std::filesystem::create_directories(args.out_dir);
    save_localization_results(results, out_path(args, "localization.json"));
    int failed = 0;
    for (const LocalizationResult& r : results) {
        if (!r.ok()) ++failed;
    }
    std::cout << "localized " << results.size() << " users (" << failed << " failed)\n";
    return failed == 0 ? 0 : 1;
}

int cmd_evaluate(const StageArgs& args) {
    const ExperimentConfig cfg = load_config(args);
    const ExperimentReport report = run_experiment(cfg, args.out_dir);
    const double med_h = quantile(report.cdf_hybrid, 0.5);
    const double med_b = quantile(report.cdf_baseline, 0.5);
    std::cout << "hybrid median error " << med_h << " m, baseline median error " << med_b
              << " m over " << cfg.trials << " trials x " << cfg.test_users << " users\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UAV RSS localization toolkit: city simulation, hybrid channel learning, "
                 "and map-aware swarm localization"};
    app.require_subcommand(1);

    StageArgs args;
    int (*handler)(const StageArgs&) = nullptr;
    const auto add = [&](const char* name, const char* desc, int (*fn)(const StageArgs&)) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", args.config_path, "JSON config file")->required();
        sub->add_option("--out", args.out_dir, "output directory")->required();
        std::uint64_t seed = 0;
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&args](const std::string& v) { args.seed_override = std::stoull(v); });
        sub->callback([&handler, fn] { handler = fn; });
        return sub;
    };

    add("gen-map", "generate a city map", cmd_gen_map);
    CLI::App* gen_data = add("gen-data", "synthesize a measurement dataset", cmd_gen_data);
    gen_data->add_option("--split", args.split, "which config block to draw from: train|test");
    add("fit-pathloss", "fit segmented path-loss parameters", cmd_fit_pathloss);
    add("train-gain", "train the antenna-gain network on fit residuals", cmd_train_gain);
    add("localize", "run swarm localization on a measurement set", cmd_localize);
    add("evaluate", "run the full Monte-Carlo experiment", cmd_evaluate);

    CLI11_PARSE(app, argc, argv);
    try {
        return handler(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
