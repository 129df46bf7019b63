#include "uavloc/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "uavloc/rng.hpp"

namespace uavloc {

TrainingSet TrainingSet::build(const CityMap& map, std::span<const Measurement> measurements,
                               std::span<const Vec2> users, double user_height) {
    TrainingSet set;
    set.records_.reserve(measurements.size());
    for (const Measurement& m : measurements) {
        if (m.k < 0 || static_cast<std::size_t>(m.k) >= users.size()) {
            throw std::invalid_argument("training set: measurement references unknown user");
        }
        TrainingRecord r;
        r.measurement = m;
        r.user = users[static_cast<std::size_t>(m.k)];
        r.los = map.is_los(m.pose.position, r.user, user_height) ? 1 : 0;
        r.dist = distance(m.pose.position, Vec3{r.user.x, r.user.y, user_height});
        r.x = features(m.pose, r.user, user_height);
        (r.los ? set.n_los_ : set.n_nlos_)++;
        set.records_.push_back(r);
    }
    return set;
}

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
};

// OLS of g on s = -10*log10(d); slope is the path-loss exponent, the
// intercept the reference gain.
LineFit fit_segment(const std::vector<TrainingRecord>& records, std::uint8_t los_value,
                    const char* name) {
    std::vector<double> s, g;
    for (const TrainingRecord& r : records) {
        if (r.los != los_value) continue;
        s.push_back(-10.0 * std::log10(r.dist));
        g.push_back(r.measurement.g);
    }
    if (s.size() < 2) {
        throw std::runtime_error(std::string("fit_pathloss: ") + name +
                                 " segment has fewer than two points");
    }
    const double n = static_cast<double>(s.size());
    const double s_mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    const double g_mean = std::accumulate(g.begin(), g.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        sxx += (s[i] - s_mean) * (s[i] - s_mean);
        sxy += (s[i] - s_mean) * (g[i] - g_mean);
    }
    if (sxx == 0.0) {
        throw std::runtime_error(std::string("fit_pathloss: ") + name +
                                 " segment has no distance spread");
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = g_mean - fit.slope * s_mean;
    double sse = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double r = g[i] - (fit.intercept + fit.slope * s[i]);
        sse += r * r;
    }
    fit.residual_rms = std::sqrt(sse / n);
    return fit;
}

}  // namespace

PathLossFit fit_pathloss(const TrainingSet& train, double sigma2_los, double sigma2_nlos) {
    if (!(sigma2_los > 0.0) || !(sigma2_nlos > 0.0)) {
        throw std::invalid_argument("fit_pathloss: shadowing variances must be positive");
    }
    PathLossFit out;
    out.n_los = train.count(Segment::Los);
    out.n_nlos = train.count(Segment::Nlos);
    if (out.n_los == 0 && out.n_nlos == 0) {
        throw std::runtime_error("fit_pathloss: empty training set");
    }

    std::optional<LineFit> los, nlos;
    if (out.n_los > 0) los = fit_segment(train.records(), 1, "LoS");
    if (out.n_nlos > 0) nlos = fit_segment(train.records(), 0, "NLoS");
    if (!los) {
        los = nlos;
        out.borrowed_segment = Segment::Los;
    }
    if (!nlos) {
        nlos = los;
        out.borrowed_segment = Segment::Nlos;
    }

    out.params.alpha_los = los->slope;
    out.params.beta_los = los->intercept;
    out.params.sigma2_los = sigma2_los;
    out.params.alpha_nlos = nlos->slope;
    out.params.beta_nlos = nlos->intercept;
    out.params.sigma2_nlos = sigma2_nlos;
    out.residual_rms_los = los->residual_rms;
    out.residual_rms_nlos = nlos->residual_rms;
    return out;
}

void save_pathloss_fit(const PathLossFit& fit, const std::string& path) {
    nlohmann::json j{{"alpha_los", fit.params.alpha_los},
                     {"beta_los", fit.params.beta_los},
                     {"alpha_nlos", fit.params.alpha_nlos},
                     {"beta_nlos", fit.params.beta_nlos},
                     {"sigma2_los", fit.params.sigma2_los},
                     {"sigma2_nlos", fit.params.sigma2_nlos},
                     {"residual_rms_per_segment",
                      {{"los", fit.residual_rms_los}, {"nlos", fit.residual_rms_nlos}}},
                     {"n_records_per_segment",
                      {{"los", fit.n_los}, {"nlos", fit.n_nlos}}}};
    if (fit.borrowed_segment) {
        j["borrowed_segment"] = *fit.borrowed_segment == Segment::Los ? "los" : "nlos";
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_pathloss_fit: cannot open " + path);
    out << j.dump(2) << '\n';
}

PathLossFit load_pathloss_fit(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_pathloss_fit: cannot open " + path);
    nlohmann::json j;
    in >> j;
    PathLossFit fit;
    fit.params.alpha_los = j.at("alpha_los").get<double>();
    fit.params.beta_los = j.at("beta_los").get<double>();
    fit.params.alpha_nlos = j.at("alpha_nlos").get<double>();
    fit.params.beta_nlos = j.at("beta_nlos").get<double>();
    fit.params.sigma2_los = j.at("sigma2_los").get<double>();
    fit.params.sigma2_nlos = j.at("sigma2_nlos").get<double>();
    fit.residual_rms_los = j.at("residual_rms_per_segment").at("los").get<double>();
    fit.residual_rms_nlos = j.at("residual_rms_per_segment").at("nlos").get<double>();
    fit.n_los = j.at("n_records_per_segment").at("los").get<std::size_t>();
    fit.n_nlos = j.at("n_records_per_segment").at("nlos").get<std::size_t>();
    if (j.contains("borrowed_segment")) {
        fit.borrowed_segment =
            j.at("borrowed_segment").get<std::string>() == "los" ? Segment::Los : Segment::Nlos;
    }
    return fit;
}

namespace {

GainBatch slice_batch(const GainBatch& full, std::span<const int> idx) {
    GainBatch b;
    b.inputs.resize(full.inputs.rows(), static_cast<Eigen::Index>(idx.size()));
    b.targets.resize(static_cast<Eigen::Index>(idx.size()));
    b.weights.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        b.inputs.col(static_cast<Eigen::Index>(i)) = full.inputs.col(idx[i]);
        b.targets(static_cast<Eigen::Index>(i)) = full.targets(idx[i]);
        b.weights(static_cast<Eigen::Index>(i)) = full.weights(idx[i]);
    }
    return b;
}

}  // namespace

GainTrainResult train_gain(const TrainingSet& train, const PathLossParams& fixed,
                           const GainTrainOptions& opts) {
    const auto& records = train.records();
    if (records.size() < 2) throw std::runtime_error("train_gain: not enough records");
    if (!(fixed.sigma2_los > 0.0) || !(fixed.sigma2_nlos > 0.0)) {
        throw std::invalid_argument("train_gain: shadowing variances must be positive");
    }

    // Residual targets with the path loss frozen; the label-count likelihood
    // term is constant in the network parameters and dropped.
    GainBatch full;
    full.inputs.resize(4, static_cast<Eigen::Index>(records.size()));
    full.targets.resize(static_cast<Eigen::Index>(records.size()));
    full.weights.resize(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const TrainingRecord& r = records[i];
        const Segment z = segment_from_label(r.los);
        for (int c = 0; c < 4; ++c) full.inputs(c, static_cast<Eigen::Index>(i)) = r.x[c];
        full.targets(static_cast<Eigen::Index>(i)) = r.measurement.g - path_loss(fixed, z, r.dist);
        full.weights(static_cast<Eigen::Index>(i)) = 1.0 / fixed.sigma2(z);
    }

    Rng rng(derive_seed(opts.seed, "train-gain"));
    std::vector<int> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());

    const int n_val = opts.val_fraction > 0.0
                          ? std::max(1, static_cast<int>(std::lround(opts.val_fraction *
                                                                     static_cast<double>(records.size()))))
                          : 0;
    if (n_val >= static_cast<int>(records.size())) {
        throw std::runtime_error("train_gain: validation split leaves no training data");
    }
    std::vector<int> val_idx(order.begin(), order.begin() + n_val);
    std::vector<int> train_idx(order.begin() + n_val, order.end());

    const GainBatch val_batch = n_val > 0 ? slice_batch(full, val_idx) : GainBatch{};
    const GainBatch train_batch = slice_batch(full, train_idx);
    const double train_n = static_cast<double>(train_idx.size());
    const double val_n = static_cast<double>(std::max(1, n_val));

    GainNetwork net = GainNetwork::make_default(derive_seed(opts.seed, "init"));
    AdamOptimizer optimizer(opts.learning_rate);

    auto mean_train_loss = [&] { return batch_loss(net, train_batch) / train_n; };
    auto mean_val_loss = [&] {
        return n_val > 0 ? batch_loss(net, val_batch) / val_n : mean_train_loss();
    };

    GainTrainResult result;
    result.log.push_back({0, mean_train_loss(), mean_val_loss()});
    result.net = net;
    result.best_epoch = 0;
    result.best_val_loss = result.log.front().loss_val;

    int since_best = 0;
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng.engine());
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(opts.batch_size)) {
            const std::size_t stop =
                std::min(train_idx.size(), start + static_cast<std::size_t>(opts.batch_size));
            const GainBatch batch =
                slice_batch(full, std::span<const int>(train_idx.data() + start, stop - start));
            const NetGradients grads = gradient(net, batch);
            optimizer.step(net, grads);
        }

        const double lt = mean_train_loss();
        const double lv = mean_val_loss();
        if (!std::isfinite(lt) || !std::isfinite(lv)) {
            std::ostringstream msg;
            msg << "train_gain: loss diverged at epoch " << epoch << " (last finite epoch "
                << result.log.back().epoch << ")";
            throw std::runtime_error(msg.str());
        }
        result.log.push_back({epoch, lt, lv});

        if (lv < result.best_val_loss) {
            result.best_val_loss = lv;
            result.best_epoch = epoch;
            result.net = net;
            since_best = 0;
        } else if (++since_best > opts.patience) {
            break;
        }
    }
    return result;
}

void save_train_log(std::span<const TrainLogEntry> log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_train_log: cannot open " + path);
    out << "epoch,loss_train,loss_val\n";
    char buf[128];
    for (const TrainLogEntry& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", e.epoch, e.loss_train, e.loss_val);
        out << buf;
    }
}

std::vector<TrainLogEntry> load_train_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_train_log: cannot open " + path);
    std::vector<TrainLogEntry> log;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TrainLogEntry e;
        std::istringstream ss(line);
        char comma;
        ss >> e.epoch >> comma >> e.loss_train >> comma >> e.loss_val;
        if (!ss) throw std::runtime_error("load_train_log: malformed row in " + path);
        log.push_back(e);
    }
    return log;
}

HybridChannelModel HybridChannelModel::baseline(const PathLossParams& params) {
    HybridChannelModel m;
    m.pathloss = params;
    return m;
}

HybridChannelModel HybridChannelModel::with_network(const PathLossParams& params,
                                                    GainNetwork net) {
    HybridChannelModel m;
    m.pathloss = params;
    m.gain_net = std::move(net);
    return m;
}

double HybridChannelModel::gain(const UavPose& pose, const Vec2& candidate,
                                double candidate_height) const {
    if (analytic_gain) return analytic_gain(pose, candidate);
    if (gain_net) return gain_net->forward(features(pose, candidate, candidate_height));
    return 0.0;
}

std::vector<double> HybridChannelModel::gain_batch(std::span<const UavPose> poses,
                                                   const Vec2& candidate,
                                                   double candidate_height) const {
    std::vector<double> out(poses.size(), 0.0);
    if (analytic_gain) {
        for (std::size_t i = 0; i < poses.size(); ++i) out[i] = analytic_gain(poses[i], candidate);
    } else if (gain_net) {
        const Eigen::VectorXd y =
            gain_net->forward_batch(feature_matrix(poses, candidate, candidate_height));
        for (std::size_t i = 0; i < poses.size(); ++i) out[i] = y(static_cast<Eigen::Index>(i));
    }
    return out;
}

double predict(const HybridChannelModel& model, const UavPose& pose, const Vec2& candidate,
               Segment z, double candidate_height) {
    const double d = distance(pose.position, Vec3{candidate.x, candidate.y, candidate_height});
    return path_loss(model.pathloss, z, d) + model.gain(pose, candidate, candidate_height);
}

}  // namespace uavloc
