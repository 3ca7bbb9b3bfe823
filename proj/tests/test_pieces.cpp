#include "oracles.hpp"

#include "pwmc/evaluate.hpp"
#include "pwmc/fixtures.hpp"
#include "pwmc/pieces.hpp"
#include "pwmc/sampling.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>

using namespace pwmc;
using fixtures::vec;

namespace {

std::set<std::string> labels(const std::vector<Piece>& pieces) {
    std::set<std::string> out;
    for (const auto& pc : pieces) {
        out.insert(pc.pattern.to_string());
    }
    return out;
}

// Patterns seen on a fine grid, skipping points close to a kink.
std::set<std::string> grid_patterns_input(const NetworkSpec& net, const Vec& p, double half, int res) {
    std::set<std::string> seen;
    for (int i = 0; i <= res; ++i) {
        for (int j = 0; j <= res; ++j) {
            const Vec x = vec({-half + 2.0 * half * i / res + 1e-7, -half + 2.0 * half * j / res + 3e-7});
            const auto fp = forward(net, p, x);
            bool near_kink = false;
            for (std::size_t m = 0; m < net.layers.size(); ++m) {
                if (net.layers[m].relu && fp.preactivations[m].cwiseAbs().minCoeff() < 1e-9) {
                    near_kink = true;
                }
            }
            if (!near_kink) {
                seen.insert(pattern_at_input(net, p, x).to_string());
            }
        }
    }
    return seen;
}

} // namespace

TEST(Pieces, SingleNeuronHasSixParameterPieces) {
    const auto net = fixtures::single_neuron();
    const auto d = fixtures::bad_minima_data(2.0);
    const auto pieces = enumerate_pieces(net, fixtures::bad_minimum_high(2.0), d, PieceSpace::of_layer(0));
    ASSERT_EQ(pieces.size(), 6u);
    const auto got = labels(pieces);
    EXPECT_EQ(got.count("100"), 0u); // b <= 0 but -a + b >= 0 and a + b >= 0 fails dimension
    EXPECT_EQ(got.count("011"), 0u);
    // lexicographic order
    std::vector<std::string> order;
    for (const auto& pc : pieces) {
        order.push_back(pc.pattern.to_string());
    }
    EXPECT_TRUE(std::is_sorted(order.begin(), order.end()));
    for (const auto& pc : pieces) {
        EXPECT_TRUE(is_full_dimensional(pc.polytope));
    }
}

TEST(Pieces, SingleNeuronPiecesMatchGridScan) {
    // independent oracle: sign patterns of (b, -a + b, a + b) on a grid
    std::set<std::string> seen;
    for (int i = -50; i <= 50; ++i) {
        for (int j = -50; j <= 50; ++j) {
            const double a = 0.1 * i + 1e-7;
            const double b = 0.1 * j + 3e-7;
            std::string s;
            for (double x : {0.0, -1.0, 1.0}) {
                s.push_back(a * x + b >= 0.0 ? '1' : '0');
            }
            seen.insert(s);
        }
    }
    const auto net = fixtures::single_neuron();
    const auto pieces = enumerate_pieces(net, vec({0, 0}), fixtures::bad_minima_data(2.0), PieceSpace::of_layer(0));
    EXPECT_EQ(labels(pieces), seen);
}

TEST(Pieces, SurfaceInputPiecesMatchGridScan) {
    const auto net = fixtures::surface_network();
    const auto p = fixtures::surface_params();
    const auto pieces = enumerate_pieces(net, p, Dataset{}, PieceSpace::input());
    EXPECT_EQ(labels(pieces), grid_patterns_input(net, p, 6.0, 600));
}

TEST(Pieces, CapIsEnforced) {
    const auto net = fixtures::single_neuron();
    const auto d = fixtures::bad_minima_data(2.0);
    try {
        (void)enumerate_pieces(net, vec({0, 0}), d, PieceSpace::of_layer(0), 2);
        FAIL() << "expected a refusal";
    } catch (const CapExceeded& e) {
        EXPECT_EQ(e.count(), 3u);
    }
}

TEST(Pieces, InputPieceMapEqualsNetworkInside) {
    // property: on random nets, samples of each input piece carry its pattern
    // and the frozen affine map reproduces the network output there
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        std::mt19937_64 rng(seed);
        auto net = fixtures::random_network(2, 2, 3, 1);
        const Vec p = fixtures::random_params(net, rng);
        const auto pieces = enumerate_pieces(net, p, Dataset{}, PieceSpace::input());
        ASSERT_FALSE(pieces.empty());
        for (const auto& pc : pieces) {
            const auto ip = input_piece_with_map(net, p, pc.pattern);
            PolytopeSampler sampler(ip.polytope, 2.0, rng);
            for (int s = 0; s < 20; ++s) {
                const Vec x = sampler.next();
                const auto out = forward(net, p, x).output();
                EXPECT_NEAR((ip.output.G * x + ip.output.g - out).norm(), 0.0, 1e-10);
                EXPECT_EQ(pattern_at_input(net, p, x).to_string(), pc.pattern.to_string()) << "seed " << seed;
            }
        }
    }
}

TEST(Pieces, PatternAtPointIsAmongLayerPieces) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(100 + seed);
        const auto net = fixtures::random_network(2, 1, 2, 1);
        const Vec p = fixtures::random_params(net, rng);
        const auto d = fixtures::random_dataset(net, 3, rng);
        for (std::size_t m = 0; m < net.layers.size(); ++m) {
            const auto pieces = enumerate_pieces(net, p, d, PieceSpace::of_layer(m));
            const auto here = pattern_at(net, p, d).to_string();
            if (boundary_distance(net, p, d) > 1e-9) {
                EXPECT_EQ(labels(pieces).count(here), 1u) << "seed " << seed << " layer " << m;
            }
            const auto layout = net.layout();
            for (const auto& pc : pieces) {
                // samples of the layer's parameters inside the piece reproduce its pattern
                PolytopeSampler sampler(pc.polytope, 3.0, rng);
                for (int s = 0; s < 10; ++s) {
                    const Vec theta = sampler.next();
                    Vec q = p;
                    q.segment(static_cast<Eigen::Index>(layout[m].offset), theta.size()) = theta;
                    EXPECT_EQ(pattern_at(net, q, d).to_string(), pc.pattern.to_string());
                }
            }
        }
    }
}

TEST(Pieces, LayerPieceContainsItsPoint) {
    const auto net = fixtures::single_neuron();
    const auto d = fixtures::bad_minima_data(2.0);
    const Vec p = fixtures::bad_minimum_low(2.0);
    const auto pat = pattern_at(net, p, d);
    EXPECT_EQ(pat.to_string(), "101");
    const auto poly = layer_param_piece(net, p, 0, d, pat);
    EXPECT_TRUE(poly.contains(p));
    EXPECT_NEAR(boundary_distance(net, p, d), 0.5 / (1.0 + std::sqrt(3.5 * 3.5 + 0.25)), 1e-12);
}

TEST(Pieces, HammingAndEquality) {
    const auto net = fixtures::single_neuron();
    const auto d = fixtures::bad_minima_data(2.0);
    const auto a = pattern_at(net, fixtures::bad_minimum_low(2.0), d);
    const auto b = pattern_at(net, fixtures::bad_minimum_high(2.0), d);
    EXPECT_EQ(b.to_string(), "110");
    EXPECT_EQ(a.hamming(b), 2u);
    EXPECT_FALSE(a == b);
    EXPECT_TRUE(a == a);
}
