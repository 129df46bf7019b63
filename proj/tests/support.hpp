#pragma once

// Independent oracles shared by the unit and acceptance suites. These
// deliberately avoid the library's own geometry/backprop code paths: the LoS
// oracle is pure point sampling, the network oracle is a plain nested-loop
// forward pass, and the gradient oracle is central finite differences.

#include <cmath>
#include <cstddef>
#include <vector>

#include "uavloc/citymap.hpp"
#include "uavloc/netgain.hpp"

namespace testsupport {

// Walks the UAV-user segment in steps of at most `step` meters and reports
// blockage iff some sampled point lies strictly inside a building.
inline bool sampled_los(const uavloc::CityMap& map, const uavloc::Vec3& uav,
                        const uavloc::Vec2& user, double user_height = 0.0, double step = 0.1) {
    const uavloc::Vec3 a = uav;
    const uavloc::Vec3 b{user.x, user.y, user_height};
    const double len = uavloc::distance(a, b);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps);
        const double x = a.x + t * (b.x - a.x);
        const double y = a.y + t * (b.y - a.y);
        const double z = a.z + t * (b.z - a.z);
        for (const uavloc::Building& bl : map.buildings()) {
            if (x > bl.footprint_min.x && x < bl.footprint_max.x && y > bl.footprint_min.y &&
                y < bl.footprint_max.y && z < bl.height) {
                return false;
            }
        }
    }
    return true;
}

// Smallest distance from any sampled in-footprint point to the roofline or a
// footprint wall; used to recognize grazing geometries that a tie-break rule
// may legitimately resolve either way.
inline double grazing_margin(const uavloc::CityMap& map, const uavloc::Vec3& uav,
                             const uavloc::Vec2& user, double user_height = 0.0,
                             double step = 0.01) {
    const uavloc::Vec3 a = uav;
    const uavloc::Vec3 b{user.x, user.y, user_height};
    const double len = uavloc::distance(a, b);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / step)));
    double margin = 1e300;
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps);
        const double x = a.x + t * (b.x - a.x);
        const double y = a.y + t * (b.y - a.y);
        const double z = a.z + t * (b.z - a.z);
        for (const uavloc::Building& bl : map.buildings()) {
            if (x >= bl.footprint_min.x && x <= bl.footprint_max.x && y >= bl.footprint_min.y &&
                y <= bl.footprint_max.y && z <= bl.height) {
                const double m = std::min({bl.height - z, x - bl.footprint_min.x,
                                           bl.footprint_max.x - x, y - bl.footprint_min.y,
                                           bl.footprint_max.y - y});
                margin = std::min(margin, std::abs(m));
            }
        }
    }
    return margin;
}

// Plain-loop reimplementation of the layered affine+activation composition.
inline double reference_forward(const uavloc::GainNetwork& net,
                                const uavloc::GainFeatures& x) {
    std::vector<double> a(x.begin(), x.end());
    for (const uavloc::Layer& layer : net.layers()) {
        std::vector<double> next(static_cast<std::size_t>(layer.weights.rows()), 0.0);
        for (std::size_t r = 0; r < next.size(); ++r) {
            double z = layer.bias(static_cast<Eigen::Index>(r));
            for (std::size_t c = 0; c < a.size(); ++c) {
                z += layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
                     a[c];
            }
            switch (layer.activation) {
                case uavloc::Activation::Tanh: next[r] = std::tanh(z); break;
                case uavloc::Activation::Relu: next[r] = z > 0.0 ? z : 0.0; break;
                case uavloc::Activation::Linear: next[r] = z; break;
            }
        }
        a = std::move(next);
    }
    return a[0];
}

// Central-difference gradient of the weighted squared-residual batch loss.
inline uavloc::NetGradients fd_gradient(const uavloc::GainNetwork& net,
                                        const uavloc::GainBatch& batch, double h = 1e-5) {
    uavloc::GainNetwork work = net;
    std::vector<uavloc::Layer>& layers = work.layers();
    uavloc::NetGradients grads(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        grads[l].weights =
            Eigen::MatrixXd::Zero(layers[l].weights.rows(), layers[l].weights.cols());
        grads[l].bias = Eigen::VectorXd::Zero(layers[l].bias.size());
        for (Eigen::Index r = 0; r < layers[l].weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layers[l].weights.cols(); ++c) {
                const double orig = layers[l].weights(r, c);
                layers[l].weights(r, c) = orig + h;
                const double up = uavloc::batch_loss(work, batch);
                layers[l].weights(r, c) = orig - h;
                const double down = uavloc::batch_loss(work, batch);
                layers[l].weights(r, c) = orig;
                grads[l].weights(r, c) = (up - down) / (2.0 * h);
            }
        }
        for (Eigen::Index r = 0; r < layers[l].bias.size(); ++r) {
            const double orig = layers[l].bias(r);
            layers[l].bias(r) = orig + h;
            const double up = uavloc::batch_loss(work, batch);
            layers[l].bias(r) = orig - h;
            const double down = uavloc::batch_loss(work, batch);
            layers[l].bias(r) = orig;
            grads[l].bias(r) = (up - down) / (2.0 * h);
        }
    }
    return grads;
}

}  // namespace testsupport
