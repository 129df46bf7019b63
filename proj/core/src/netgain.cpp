#include "uavloc/netgain.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "uavloc/rng.hpp"

namespace uavloc {

namespace {

void apply_activation(Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::Tanh: z = z.array().tanh(); break;
        case Activation::Relu: z = z.cwiseMax(0.0); break;
        case Activation::Linear: break;
    }
}

Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::Tanh: return (1.0 - z.array().tanh().square()).matrix();
        case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
        case Activation::Linear: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    }
    throw std::logic_error("unknown activation");
}

std::string activation_name(Activation act) {
    switch (act) {
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Linear: return "linear";
    }
    throw std::logic_error("unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    if (name == "linear") return Activation::Linear;
    throw std::runtime_error("unknown activation tag: " + name);
}

}  // namespace

GainFeatures features(const UavPose& pose, const Vec2& candidate, double candidate_height) {
    const Vec3 delta = pose.position - Vec3{candidate.x, candidate.y, candidate_height};
    const double d = delta.norm();
    if (d == 0.0) throw std::domain_error("features: coincident UAV and candidate positions");
    return {delta.x / d, delta.y / d, pose.position.z / d, pose.heading};
}

Eigen::MatrixXd feature_matrix(std::span<const UavPose> poses, const Vec2& candidate,
                               double candidate_height) {
    Eigen::MatrixXd X(4, static_cast<Eigen::Index>(poses.size()));
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const GainFeatures x = features(poses[i], candidate, candidate_height);
        for (int r = 0; r < 4; ++r) X(r, static_cast<Eigen::Index>(i)) = x[r];
    }
    return X;
}

GainNetwork::GainNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("gain network: no layers");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        if (layer.weights.rows() != layer.bias.size()) {
            throw std::invalid_argument("gain network: weight/bias shape mismatch");
        }
        if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
            throw std::invalid_argument("gain network: layer dimension mismatch");
        }
    }
    if (layers_.back().weights.rows() != 1) {
        throw std::invalid_argument("gain network: output must be scalar");
    }
}

GainNetwork GainNetwork::make_default(std::uint64_t seed) {
    return make({4, 60, 60, 40, 40, 1},
                {Activation::Tanh, Activation::Tanh, Activation::Relu, Activation::Relu,
                 Activation::Linear},
                seed);
}

GainNetwork GainNetwork::make(const std::vector<int>& sizes,
                              const std::vector<Activation>& activations, std::uint64_t seed) {
    if (sizes.size() < 2 || activations.size() != sizes.size() - 1) {
        throw std::invalid_argument("gain network: sizes/activations mismatch");
    }
    Rng rng(seed);
    std::vector<Layer> layers;
    layers.reserve(activations.size());
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Layer layer;
        layer.weights.resize(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
        }
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        layer.activation = activations[l];
        layers.push_back(std::move(layer));
    }
    return GainNetwork(std::move(layers));
}

int GainNetwork::input_dim() const {
    return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols());
}

std::size_t GainNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

double GainNetwork::forward(const GainFeatures& x) const {
    Eigen::MatrixXd col(4, 1);
    col << x[0], x[1], x[2], x[3];
    return forward_batch(col)(0);
}

Eigen::VectorXd GainNetwork::forward_batch(const Eigen::MatrixXd& X) const {
    if (X.rows() != input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
    Eigen::MatrixXd a = X;
    for (const Layer& layer : layers_) {
        Eigen::MatrixXd z = (layer.weights * a).colwise() + layer.bias;
        apply_activation(z, layer.activation);
        a = std::move(z);
    }
    return a.row(0).transpose();
}

double batch_loss(const GainNetwork& net, const GainBatch& batch) {
    const Eigen::VectorXd r = batch.targets - net.forward_batch(batch.inputs);
    return (batch.weights.array() * r.array().square()).sum();
}

NetGradients gradient(const GainNetwork& net, const GainBatch& batch, double* loss_out) {
    const auto& layers = net.layers();
    const Eigen::Index n_layers = static_cast<Eigen::Index>(layers.size());

    // Forward pass keeping pre-activations and activations per layer.
    std::vector<Eigen::MatrixXd> pre(n_layers);
    std::vector<Eigen::MatrixXd> act(n_layers + 1);
    act[0] = batch.inputs;
    for (Eigen::Index l = 0; l < n_layers; ++l) {
        pre[l] = (layers[l].weights * act[l]).colwise() + layers[l].bias;
        act[l + 1] = pre[l];
        apply_activation(act[l + 1], layers[l].activation);
    }

    const Eigen::VectorXd residual = batch.targets - act[n_layers].row(0).transpose();
    if (loss_out) *loss_out = (batch.weights.array() * residual.array().square()).sum();

    NetGradients grads(n_layers);
    // d(loss)/d(output) = -2 w r, then standard backprop.
    Eigen::MatrixXd delta =
        (-2.0 * batch.weights.array() * residual.array()).matrix().transpose();
    delta = delta.cwiseProduct(activation_derivative(pre[n_layers - 1], layers[n_layers - 1].activation).row(0));

    for (Eigen::Index l = n_layers - 1; l >= 0; --l) {
        grads[l].weights = delta * act[l].transpose();
        grads[l].bias = delta.rowwise().sum();
        if (l > 0) {
            delta = (layers[l].weights.transpose() * delta)
                        .cwiseProduct(activation_derivative(pre[l - 1], layers[l - 1].activation));
        }
    }
    return grads;
}

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void AdamOptimizer::step(GainNetwork& net, const NetGradients& grads) {
    auto& layers = net.layers();
    if (grads.size() != layers.size()) throw std::invalid_argument("adam: gradient shape mismatch");
    if (m_.empty()) {
        m_.resize(layers.size());
        v_.resize(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            m_[l].weights = Eigen::MatrixXd::Zero(layers[l].weights.rows(), layers[l].weights.cols());
            m_[l].bias = Eigen::VectorXd::Zero(layers[l].bias.size());
            v_[l] = m_[l];
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        m_[l].weights = beta1_ * m_[l].weights + (1.0 - beta1_) * grads[l].weights;
        m_[l].bias = beta1_ * m_[l].bias + (1.0 - beta1_) * grads[l].bias;
        v_[l].weights.array() =
            beta2_ * v_[l].weights.array() + (1.0 - beta2_) * grads[l].weights.array().square();
        v_[l].bias.array() =
            beta2_ * v_[l].bias.array() + (1.0 - beta2_) * grads[l].bias.array().square();

        layers[l].weights.array() -=
            lr_ * (m_[l].weights.array() / bc1) / ((v_[l].weights.array() / bc2).sqrt() + eps_);
        layers[l].bias.array() -=
            lr_ * (m_[l].bias.array() / bc1) / ((v_[l].bias.array() / bc2).sqrt() + eps_);
    }
}

void save_network(const GainNetwork& net, const CheckpointMeta& meta, const std::string& path) {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (const Layer& layer : net.layers()) {
        nlohmann::json jl;
        jl["rows"] = layer.weights.rows();
        jl["cols"] = layer.weights.cols();
        std::vector<double> w(layer.weights.size());
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                w[static_cast<std::size_t>(r * layer.weights.cols() + c)] = layer.weights(r, c);
            }
        }
        jl["weights"] = w;
        jl["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
        jl["activation"] = activation_name(layer.activation);
        j["layers"].push_back(std::move(jl));
    }
    j["meta"] = {{"trained_on", meta.trained_on}, {"seed", meta.seed}, {"epochs", meta.epochs}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_network: cannot open " + path);
    out << j.dump(2) << '\n';
}

GainNetwork load_network(const std::string& path, CheckpointMeta* meta) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_network: cannot open " + path);
    nlohmann::json j;
    in >> j;

    std::vector<Layer> layers;
    for (const auto& jl : j.at("layers")) {
        Layer layer;
        const Eigen::Index rows = jl.at("rows").get<Eigen::Index>();
        const Eigen::Index cols = jl.at("cols").get<Eigen::Index>();
        const auto w = jl.at("weights").get<std::vector<double>>();
        const auto b = jl.at("bias").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
            static_cast<Eigen::Index>(b.size()) != rows) {
            throw std::runtime_error("load_network: malformed layer in " + path);
        }
        layer.weights.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
            }
        }
        layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
        layer.activation = activation_from_name(jl.at("activation").get<std::string>());
        layers.push_back(std::move(layer));
    }
    if (meta) {
        const auto& jm = j.at("meta");
        meta->trained_on = jm.at("trained_on").get<std::string>();
        meta->seed = jm.at("seed").get<std::uint64_t>();
        meta->epochs = jm.at("epochs").get<int>();
    }
    return GainNetwork(std::move(layers));
}

}  // namespace uavloc
