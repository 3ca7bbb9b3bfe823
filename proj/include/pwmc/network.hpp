#pragma once

#include "pwmc/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace pwmc {

/// One affine layer x -> Ax + b, optionally followed by a pointwise ReLU.
struct LayerSpec {
    int in_dim = 1;
    int out_dim = 1;
    bool relu = true;

    bool operator==(const LayerSpec&) const = default;
};

enum class ObjectiveKind { squared_error, logistic };

inline std::string to_string(ObjectiveKind k) {
    return k == ObjectiveKind::squared_error ? "squared_error" : "logistic";
}

inline ObjectiveKind objective_from_string(const std::string& s) {
    if (s == "squared_error") {
        return ObjectiveKind::squared_error;
    }
    if (s == "logistic") {
        return ObjectiveKind::logistic;
    }
    throw InputError("unknown objective '" + s + "'");
}

/// Convex, continuously differentiable loss h(z, y) of the network output.
///
/// Logistic targets are given in {0,1} and mapped to s = 2y-1 in {-1,+1};
/// the loss is log(1 + exp(-s z)) on a scalar output.
struct Objective {
    ObjectiveKind kind = ObjectiveKind::squared_error;

    [[nodiscard]] double value(const Vec& z, const Vec& y) const {
        if (kind == ObjectiveKind::squared_error) {
            return (z - y).squaredNorm();
        }
        const double t = -(2.0 * y[0] - 1.0) * z[0];
        // log(1 + e^t) without overflow
        return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
    }

    /// Gradient with respect to z.
    [[nodiscard]] Vec gradient(const Vec& z, const Vec& y) const {
        if (kind == ObjectiveKind::squared_error) {
            return 2.0 * (z - y);
        }
        const double s = 2.0 * y[0] - 1.0;
        const double t = -s * z[0];
        // d/dz log(1+e^t) = -s * sigmoid(t)
        const double sig = t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
        Vec g(1);
        g[0] = -s * sig;
        return g;
    }
};

/// Position of one layer's parameters inside the flat parameter vector:
/// the weight matrix in row-major order followed by the bias.
struct LayerBlock {
    std::size_t offset = 0;
    int rows = 0; // out_dim
    int cols = 0; // in_dim

    [[nodiscard]] std::size_t weight_count() const { return static_cast<std::size_t>(rows) * cols; }
    [[nodiscard]] std::size_t size() const { return weight_count() + static_cast<std::size_t>(rows); }
    [[nodiscard]] std::size_t bias_offset() const { return offset + weight_count(); }
    [[nodiscard]] std::size_t end() const { return offset + size(); }
    [[nodiscard]] std::size_t weight_index(int r, int c) const {
        return offset + static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c);
    }
};

using ParamLayout = std::vector<LayerBlock>;

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    Objective objective;

    bool operator==(const NetworkSpec& o) const {
        return layers == o.layers && objective.kind == o.objective.kind;
    }

    void validate() const {
        if (layers.empty()) {
            throw InputError("network needs at least one layer");
        }
        for (std::size_t m = 0; m < layers.size(); ++m) {
            if (layers[m].in_dim < 1 || layers[m].out_dim < 1) {
                throw InputError("layer " + std::to_string(m) + " has a non-positive dimension");
            }
            if (m > 0 && layers[m].in_dim != layers[m - 1].out_dim) {
                throw InputError("layer " + std::to_string(m) + " input " +
                                 std::to_string(layers[m].in_dim) + " does not match previous output " +
                                 std::to_string(layers[m - 1].out_dim));
            }
        }
        if (objective.kind == ObjectiveKind::logistic && output_dim() != 1) {
            throw InputError("logistic objective requires a scalar network output");
        }
    }

    [[nodiscard]] int input_dim() const { return layers.front().in_dim; }
    [[nodiscard]] int output_dim() const { return layers.back().out_dim; }
    [[nodiscard]] int target_dim() const { return output_dim(); }

    [[nodiscard]] ParamLayout layout() const {
        ParamLayout out;
        std::size_t offset = 0;
        for (const auto& l : layers) {
            LayerBlock b{offset, l.out_dim, l.in_dim};
            out.push_back(b);
            offset = b.end();
        }
        return out;
    }

    [[nodiscard]] std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) {
            n += static_cast<std::size_t>(l.in_dim) * l.out_dim + static_cast<std::size_t>(l.out_dim);
        }
        return n;
    }

    /// ReLU components per data point (summed over ReLU layers).
    [[nodiscard]] std::size_t relu_units() const {
        std::size_t n = 0;
        for (const auto& l : layers) {
            if (l.relu) {
                n += static_cast<std::size_t>(l.out_dim);
            }
        }
        return n;
    }

    /// Default index cover: one set per layer.
    [[nodiscard]] IndexCover layer_cover() const {
        IndexCover c;
        for (const auto& b : layout()) {
            IndexSet s;
            for (std::size_t i = b.offset; i < b.end(); ++i) {
                s.push_back(i);
            }
            c.sets.push_back(std::move(s));
        }
        return c;
    }

    /// Layer whose parameter block contains every index of `idx`, or -1.
    [[nodiscard]] int owning_layer(const IndexSet& idx) const {
        if (idx.empty()) {
            return -1;
        }
        const auto lay = layout();
        for (std::size_t m = 0; m < lay.size(); ++m) {
            bool all = true;
            for (auto i : idx) {
                if (i < lay[m].offset || i >= lay[m].end()) {
                    all = false;
                    break;
                }
            }
            if (all) {
                return static_cast<int>(m);
            }
        }
        return -1;
    }
};

/// Read-only views of one layer's weights and bias inside a flat parameter vector.
inline Eigen::Map<const RowMat> weights(const Vec& p, const LayerBlock& b) {
    return {p.data() + b.offset, b.rows, b.cols};
}

inline Eigen::Map<const Vec> bias(const Vec& p, const LayerBlock& b) {
    return {p.data() + b.bias_offset(), b.rows};
}

struct Dataset {
    std::vector<Vec> inputs;
    std::vector<Vec> targets;

    [[nodiscard]] std::size_t size() const { return inputs.size(); }

    void validate(const NetworkSpec& net) const {
        if (inputs.empty()) {
            throw InputError("dataset is empty");
        }
        if (inputs.size() != targets.size()) {
            throw InputError("dataset has " + std::to_string(inputs.size()) + " inputs but " +
                             std::to_string(targets.size()) + " targets");
        }
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            if (inputs[k].size() != net.input_dim()) {
                throw InputError("data point " + std::to_string(k) + " has input dimension " +
                                 std::to_string(inputs[k].size()) + ", network expects " +
                                 std::to_string(net.input_dim()));
            }
            if (targets[k].size() != net.target_dim()) {
                throw InputError("data point " + std::to_string(k) + " has target dimension " +
                                 std::to_string(targets[k].size()) + ", network expects " +
                                 std::to_string(net.target_dim()));
            }
            if (net.objective.kind == ObjectiveKind::logistic && targets[k][0] != 0.0 &&
                targets[k][0] != 1.0) {
                throw InputError("logistic target of point " + std::to_string(k) + " is not 0 or 1");
            }
        }
    }

    void push_back(Vec x, Vec y) {
        inputs.push_back(std::move(x));
        targets.push_back(std::move(y));
    }
};

inline void check_params(const NetworkSpec& net, const Vec& p) {
    if (static_cast<std::size_t>(p.size()) != net.param_count()) {
        throw InputError("parameter vector has length " + std::to_string(p.size()) + ", network needs " +
                         std::to_string(net.param_count()));
    }
}

} // namespace pwmc
