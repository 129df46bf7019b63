#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavloc/channel.hpp"
#include "uavloc/citymap.hpp"
#include "uavloc/netgain.hpp"

namespace uavloc {

/// One labeled training record: a measurement from a user with a known
/// position, with the map-derived LoS label and precomputed geometry.
struct TrainingRecord {
    Measurement measurement;
    Vec2 user;
    std::uint8_t los = 0;
    double dist = 0.0;
    GainFeatures x{};
};

/// Offline calibration data built from measurements with known user
/// positions; LoS labels come from the same map used at evaluation time.
class TrainingSet {
  public:
    static TrainingSet build(const CityMap& map, std::span<const Measurement> measurements,
                             std::span<const Vec2> users, double user_height = 0.0);

    const std::vector<TrainingRecord>& records() const { return records_; }
    std::size_t count(Segment z) const { return z == Segment::Los ? n_los_ : n_nlos_; }

  private:
    std::vector<TrainingRecord> records_;
    std::size_t n_los_ = 0;
    std::size_t n_nlos_ = 0;
};

struct PathLossFit {
    PathLossParams params;
    double residual_rms_los = 0.0;
    double residual_rms_nlos = 0.0;
    std::size_t n_los = 0;
    std::size_t n_nlos = 0;
    /// Set when one segment had no data and the other segment's line was
    /// reused for it (that branch is then never selected by the same map).
    std::optional<Segment> borrowed_segment;
};

/// Phase one: per-segment least-squares fit of g on -10*log10(d), gain
/// ignored. The per-segment weights are constant, so each segment reduces to
/// an ordinary least-squares line. Throws std::runtime_error naming the
/// segment when one is present with fewer than two points or no distance
/// spread; a segment with no records at all borrows the other's fit.
PathLossFit fit_pathloss(const TrainingSet& train, double sigma2_los = 2.0,
                         double sigma2_nlos = 5.0);

void save_pathloss_fit(const PathLossFit& fit, const std::string& path);
PathLossFit load_pathloss_fit(const std::string& path);

struct GainTrainOptions {
    double learning_rate = 1e-3;
    int batch_size = 128;
    int epochs = 500;
    double val_fraction = 0.1;
    int patience = 25;
    std::uint64_t seed = 0;
};

struct TrainLogEntry {
    int epoch = 0;  // 0 is the initial state before any update
    double loss_train = 0.0;
    double loss_val = 0.0;
};

struct GainTrainResult {
    GainNetwork net;
    std::vector<TrainLogEntry> log;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

/// Phase two: trains the gain network on residuals g - phi_z(d) with the
/// path-loss parameters frozen, weighting records by 1/sigma_z^2. Returns
/// the parameters with the best held-out loss. Throws std::runtime_error on
/// divergence, reporting the last finite epoch.
GainTrainResult train_gain(const TrainingSet& train, const PathLossParams& fixed,
                           const GainTrainOptions& opts);

void save_train_log(std::span<const TrainLogEntry> log, const std::string& path);
std::vector<TrainLogEntry> load_train_log(const std::string& path);

/// Learned channel: fitted path loss plus the gain term. The gain is the
/// trained network when present, an analytic override when set (exact
/// simulation models in tests), or zero (the conventional baseline).
struct HybridChannelModel {
    PathLossParams pathloss;
    std::optional<GainNetwork> gain_net;
    std::function<double(const UavPose&, const Vec2&)> analytic_gain;

    static HybridChannelModel baseline(const PathLossParams& params);
    static HybridChannelModel with_network(const PathLossParams& params, GainNetwork net);

    bool has_gain() const { return gain_net.has_value() || static_cast<bool>(analytic_gain); }

    double gain(const UavPose& pose, const Vec2& candidate, double candidate_height = 0.0) const;

    /// Gain for many poses against one candidate; batches the network pass.
    std::vector<double> gain_batch(std::span<const UavPose> poses, const Vec2& candidate,
                                   double candidate_height = 0.0) const;
};

/// Channel prediction for a given segment: phi_z(d) + gain.
double predict(const HybridChannelModel& model, const UavPose& pose, const Vec2& candidate,
               Segment z, double candidate_height = 0.0);

}  // namespace uavloc
