#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uavloc/geometry.hpp"

namespace uavloc {

enum class Activation : std::uint8_t { Tanh, Relu, Linear };

/// Network input: normalized UAV-user direction plus raw heading,
/// [dx/d, dy/d, z/d, psi].
using GainFeatures = std::array<double, 4>;

/// Builds the feature vector for a pose and a candidate ground position.
/// Throws std::domain_error for coincident points.
GainFeatures features(const UavPose& pose, const Vec2& candidate, double candidate_height = 0.0);

/// Feature matrix (4 x N) for a shared candidate, one column per pose.
Eigen::MatrixXd feature_matrix(std::span<const UavPose> poses, const Vec2& candidate,
                               double candidate_height = 0.0);

struct Layer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
    Activation activation = Activation::Linear;
};

/// Small dense net mapping the 4 direction/heading features to a gain in dB.
class GainNetwork {
  public:
    GainNetwork() = default;
    explicit GainNetwork(std::vector<Layer> layers);

    /// The antenna-gain architecture: hidden sizes 60-60-40-40 with
    /// tanh/tanh/relu/relu, linear scalar output. Glorot-uniform init.
    static GainNetwork make_default(std::uint64_t seed);

    /// Arbitrary topology, Glorot-uniform init. activations.size() must equal
    /// sizes.size() - 1.
    static GainNetwork make(const std::vector<int>& sizes,
                            const std::vector<Activation>& activations, std::uint64_t seed);

    double forward(const GainFeatures& x) const;

    /// Evaluates every column of X (input_dim x N); returns N outputs.
    Eigen::VectorXd forward_batch(const Eigen::MatrixXd& X) const;

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    int input_dim() const;
    std::size_t parameter_count() const;

  private:
    std::vector<Layer> layers_;
};

/// Weighted squared-residual batch: loss(theta) = sum_i w_i (t_i - f(x_i))^2.
struct GainBatch {
    Eigen::MatrixXd inputs;   // input_dim x N
    Eigen::VectorXd targets;  // N
    Eigen::VectorXd weights;  // N
};

struct LayerGrad {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};
using NetGradients = std::vector<LayerGrad>;

double batch_loss(const GainNetwork& net, const GainBatch& batch);

/// Exact reverse-mode gradient of the batch loss. Optionally reports the
/// loss evaluated on the same pass.
NetGradients gradient(const GainNetwork& net, const GainBatch& batch, double* loss_out = nullptr);

/// Adaptive-moment step on the network parameters.
class AdamOptimizer {
  public:
    explicit AdamOptimizer(double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                           double epsilon = 1e-8);

    void step(GainNetwork& net, const NetGradients& grads);

  private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<LayerGrad> m_, v_;
};

struct CheckpointMeta {
    std::string trained_on;
    std::uint64_t seed = 0;
    int epochs = 0;
};

void save_network(const GainNetwork& net, const CheckpointMeta& meta, const std::string& path);
GainNetwork load_network(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace uavloc
