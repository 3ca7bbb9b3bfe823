#pragma once

#include "pwmc/network.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace pwmc {

/// Stored forward pass: preactivation[m] = A_m a_{m-1} + b_m and
/// activation[m] = g_m(a_{m-1}), with a_{-1} the input.
struct ForwardPass {
    std::vector<Vec> preactivations;
    std::vector<Vec> activations;

    [[nodiscard]] const Vec& output() const { return activations.back(); }
};

inline ForwardPass forward(const NetworkSpec& net, const Vec& p, const Vec& x) {
    check_params(net, p);
    if (x.size() != net.input_dim()) {
        throw InputError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                         std::to_string(net.input_dim()));
    }
    const auto lay = net.layout();
    ForwardPass fp;
    fp.preactivations.reserve(lay.size());
    fp.activations.reserve(lay.size());
    const Vec* in = &x;
    for (std::size_t m = 0; m < lay.size(); ++m) {
        Vec pre = weights(p, lay[m]) * (*in) + bias(p, lay[m]);
        Vec act = net.layers[m].relu ? Vec(pre.cwiseMax(0.0)) : pre;
        fp.preactivations.push_back(std::move(pre));
        fp.activations.push_back(std::move(act));
        in = &fp.activations.back();
    }
    return fp;
}

inline double point_loss(const NetworkSpec& net, const Vec& p, const Vec& x, const Vec& y) {
    return net.objective.value(forward(net, p, x).output(), y);
}

/// Mean training objective (1/M) sum_k h(f(x_k), y_k).
inline double loss(const NetworkSpec& net, const Vec& p, const Dataset& d) {
    d.validate(net);
    double total = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        total += point_loss(net, p, d.inputs[k], d.targets[k]);
    }
    return total / static_cast<double>(d.size());
}

/// Adds the gradient of h(f(x), y) into `out` by one backward pass.
///
/// The running vector is d h / d(activation of layer m); each layer turns it
/// into the gradient of its own block and hands A_m^T (.) down. A ReLU
/// component with preactivation exactly 0 is treated as alive, giving the
/// one-sided gradient of the closed piece.
inline void accumulate_point_gradient(const NetworkSpec& net, const Vec& p, const Vec& x, const Vec& y,
                                      double scale, Vec& out) {
    const auto lay = net.layout();
    const ForwardPass fp = forward(net, p, x);
    Vec upstream = net.objective.gradient(fp.output(), y) * scale;
    for (std::size_t m = lay.size(); m-- > 0;) {
        if (net.layers[m].relu) {
            for (Eigen::Index j = 0; j < upstream.size(); ++j) {
                if (fp.preactivations[m][j] < 0.0) {
                    upstream[j] = 0.0;
                }
            }
        }
        const Vec& in = m == 0 ? x : fp.activations[m - 1];
        const auto& b = lay[m];
        Eigen::Map<RowMat> gw(out.data() + b.offset, b.rows, b.cols);
        gw.noalias() += upstream * in.transpose();
        out.segment(static_cast<Eigen::Index>(b.bias_offset()), b.rows) += upstream;
        if (m > 0) {
            upstream = weights(p, b).transpose() * upstream;
        }
    }
}

/// Gradient of the mean objective with respect to all parameters (flat layout).
inline Vec grad(const NetworkSpec& net, const Vec& p, const Dataset& d) {
    d.validate(net);
    check_params(net, p);
    Vec g = Vec::Zero(p.size());
    const double scale = 1.0 / static_cast<double>(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
        accumulate_point_gradient(net, p, d.inputs[k], d.targets[k], scale, g);
    }
    return g;
}

/// Central differences with per-coordinate step `step * (1 + |x_i|)`.
inline Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x, double step) {
    if (!(step > 0.0)) {
        throw InputError("finite difference step must be positive");
    }
    Vec g(x.size());
    Vec probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = step * (1.0 + std::abs(x[i]));
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline Vec finite_diff_grad(const NetworkSpec& net, const Vec& p, const Dataset& d, double step) {
    return finite_diff_grad([&](const Vec& q) { return loss(net, q, d); }, p, step);
}

} // namespace pwmc
