#pragma once

#include "pwmc/network.hpp"
#include "pwmc/problem.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace pwmc::fixtures {

inline Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double a : v) {
        out[i++] = a;
    }
    return out;
}

/// Two ReLU layers on R^2 with squared error against the target 2:
///   f(x, y) = (2 - [[x - y]_+ - [x + y]_+ + 1]_+)^2
inline NetworkSpec surface_network() {
    NetworkSpec net;
    net.layers = {{2, 2, true}, {2, 1, true}};
    return net;
}

inline Vec surface_params() { return vec({1, -1, 1, 1, 0, 0, 1, -1, 1}); }

inline Vec surface_target() { return vec({2}); }

/// Single ReLU neuron x -> [a x + b]_+ with parameters (a, b).
inline NetworkSpec single_neuron() {
    NetworkSpec net;
    net.layers = {{1, 1, true}};
    return net;
}

/// {(0, 1/2), (-1, alpha), (1, 2 alpha)}; the unit-variance variant appends
/// floor(alpha) more copies of (1, 2 alpha).
inline Dataset bad_minima_data(double alpha, bool unit_variance = false) {
    Dataset d;
    d.push_back(vec({0.0}), vec({0.5}));
    d.push_back(vec({-1.0}), vec({alpha}));
    d.push_back(vec({1.0}), vec({2.0 * alpha}));
    if (unit_variance) {
        const auto extra = static_cast<int>(std::floor(alpha));
        for (int i = 0; i < extra; ++i) {
            d.push_back(vec({1.0}), vec({2.0 * alpha}));
        }
    }
    return d;
}

/// The two local minima (a, b) of the single neuron on bad_minima_data.
inline Vec bad_minimum_high(double alpha) { return vec({0.5 - alpha, 0.5}); }
inline Vec bad_minimum_low(double alpha) { return vec({2.0 * alpha - 0.5, 0.5}); }

/// x -> a2 (a1 x + b1) + b2, all layers linear.
inline NetworkSpec linear_chain() {
    NetworkSpec net;
    net.layers = {{1, 1, false}, {1, 1, false}};
    return net;
}

/// One point (1, 1): f = (a2 (a1 + b1) + b2 - 1)^2, bilinear in the two layers.
inline Dataset bilinear_data() {
    Dataset d;
    d.push_back(vec({1.0}), vec({1.0}));
    return d;
}

/// Scalar linear autoencoder data: targets equal inputs.
inline Dataset autoencoder_data() {
    Dataset d;
    for (double x : {-1.5, -0.5, 0.25, 1.0, 2.0}) {
        d.push_back(vec({x}), vec({x}));
    }
    return d;
}

// Analytic one-piece and few-piece objectives.

inline HPolytope halfline(bool upper, double at) {
    // upper: x >= at, else x <= at
    HPolytope p(1);
    p.add(vec({upper ? -1.0 : 1.0}), upper ? -at : at);
    return p;
}

inline FunctionObjective square() {
    auto v = [](const Vec& x) { return x.squaredNorm(); };
    auto g = [](const Vec& x) { return Vec(2.0 * x); };
    return FunctionObjective(1, v, [=](const Vec&) { return FunctionPiece{v, g, HPolytope(1)}; });
}

/// |x| with pieces x >= 0 (selected at 0) and x <= 0.
inline FunctionObjective abs_value() {
    auto v = [](const Vec& x) { return std::abs(x[0]); };
    return FunctionObjective(1, v, [](const Vec& x) {
        if (x[0] >= 0.0) {
            return FunctionPiece{[](const Vec& z) { return z[0]; }, [](const Vec&) { return vec({1.0}); },
                                 halfline(true, 0.0)};
        }
        return FunctionPiece{[](const Vec& z) { return -z[0]; }, [](const Vec&) { return vec({-1.0}); },
                             halfline(false, 0.0)};
    });
}

/// min(x, x^4): x on x <= 0, x^4 on [0, 1], x on x >= 1.
inline FunctionObjective min_x_x4() {
    auto v = [](const Vec& x) { return std::min(x[0], std::pow(x[0], 4)); };
    return FunctionObjective(
        1, v,
        [](const Vec& x) {
            const auto linear = [](const Vec& z) { return z[0]; };
            const auto one = [](const Vec&) { return vec({1.0}); };
            if (x[0] < 0.0) {
                return FunctionPiece{linear, one, halfline(false, 0.0)};
            }
            if (x[0] > 1.0) {
                return FunctionPiece{linear, one, halfline(true, 1.0)};
            }
            HPolytope unit = halfline(true, 0.0);
            unit.append(halfline(false, 1.0));
            return FunctionPiece{[](const Vec& z) { return std::pow(z[0], 4); },
                                 [](const Vec& z) { return vec({4.0 * std::pow(z[0], 3)}); }, unit};
        },
        nullptr, -std::numeric_limits<double>::infinity());
}

/// f(x, y) = x y: convex (linear) in each coordinate, a saddle jointly.
inline FunctionObjective product_xy() {
    auto v = [](const Vec& z) { return z[0] * z[1]; };
    auto g = [](const Vec& z) { return vec({z[1], z[0]}); };
    return FunctionObjective(2, v, [=](const Vec&) { return FunctionPiece{v, g, HPolytope(2)}; }, nullptr,
                             -std::numeric_limits<double>::infinity());
}

/// f(a, b) = sum_i (x_i - a b x_i)^2 over the autoencoder inputs.
inline FunctionObjective scalar_autoencoder() {
    double sx2 = 0.0;
    for (const auto& x : autoencoder_data().inputs) {
        sx2 += x[0] * x[0];
    }
    auto v = [sx2](const Vec& z) { return sx2 * std::pow(1.0 - z[0] * z[1], 2); };
    auto g = [sx2](const Vec& z) {
        const double r = -2.0 * sx2 * (1.0 - z[0] * z[1]);
        return vec({r * z[1], r * z[0]});
    };
    return FunctionObjective(2, v, [=](const Vec&) { return FunctionPiece{v, g, HPolytope(2)}; });
}

// Seeded random instances.

/// `layers` ReLU layers of `width` units; the output layer is linear unless
/// `relu_output`.
inline NetworkSpec random_network(int layers, int in_dim, int width, int out_dim,
                                  bool relu_output = false) {
    NetworkSpec net;
    int prev = in_dim;
    for (int m = 0; m < layers; ++m) {
        const bool last = m + 1 == layers;
        const int out = last ? out_dim : width;
        net.layers.push_back({prev, out, last ? relu_output : true});
        prev = out;
    }
    return net;
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = normal(rng);
    }
    return v;
}

/// He-style scaled random parameters so activations neither vanish nor blow up.
inline Vec random_params(const NetworkSpec& net, std::mt19937_64& rng) {
    Vec p(static_cast<Eigen::Index>(net.param_count()));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& b : net.layout()) {
        const double s = std::sqrt(2.0 / b.cols);
        for (std::size_t i = b.offset; i < b.bias_offset(); ++i) {
            p[static_cast<Eigen::Index>(i)] = s * normal(rng);
        }
        for (std::size_t i = b.bias_offset(); i < b.end(); ++i) {
            p[static_cast<Eigen::Index>(i)] = 0.3 * normal(rng);
        }
    }
    return p;
}

inline Dataset random_dataset(const NetworkSpec& net, std::size_t points, std::mt19937_64& rng) {
    Dataset d;
    for (std::size_t k = 0; k < points; ++k) {
        Vec x = random_vector(rng, net.input_dim());
        Vec y = random_vector(rng, net.target_dim());
        if (net.objective.kind == ObjectiveKind::logistic) {
            y[0] = y[0] > 0.0 ? 1.0 : 0.0;
        }
        d.push_back(std::move(x), std::move(y));
    }
    return d;
}

} // namespace pwmc::fixtures
