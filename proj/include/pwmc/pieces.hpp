#pragma once

#include "pwmc/evaluate.hpp"
#include "pwmc/network.hpp"
#include "pwmc/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pwmc {

/// Dead/alive bit for every ReLU component of every data point.
///
/// Bits are stored point-major, then by layer, then by component, which is
/// also the order of `to_string()` and of piece enumeration.
class ActivationPattern {
  public:
    ActivationPattern() = default;
    ActivationPattern(const NetworkSpec& net, std::size_t points) : points_(points) {
        std::size_t off = 0;
        for (const auto& l : net.layers) {
            if (l.relu) {
                offsets_.push_back(static_cast<long>(off));
                off += static_cast<std::size_t>(l.out_dim);
            } else {
                offsets_.push_back(-1);
            }
        }
        units_ = off;
        bits_.assign(points_ * units_, 0);
    }

    [[nodiscard]] std::size_t points() const { return points_; }
    [[nodiscard]] std::size_t units_per_point() const { return units_; }
    [[nodiscard]] std::size_t size() const { return bits_.size(); }

    [[nodiscard]] std::size_t index(std::size_t point, std::size_t layer, std::size_t component) const {
        return point * units_ + static_cast<std::size_t>(offsets_.at(layer)) + component;
    }
    [[nodiscard]] bool alive(std::size_t point, std::size_t layer, std::size_t component) const {
        return bits_[index(point, layer, component)] != 0;
    }
    void set(std::size_t point, std::size_t layer, std::size_t component, bool alive) {
        bits_[index(point, layer, component)] = alive ? 1 : 0;
    }
    [[nodiscard]] bool bit(std::size_t i) const { return bits_.at(i) != 0; }
    void set_bit(std::size_t i, bool alive) { bits_.at(i) = alive ? 1 : 0; }

    [[nodiscard]] std::string to_string() const {
        std::string s;
        s.reserve(bits_.size());
        for (auto b : bits_) {
            s.push_back(b ? '1' : '0');
        }
        return s;
    }

    /// Number of differing bits (patterns of equal shape).
    [[nodiscard]] std::size_t hamming(const ActivationPattern& o) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < bits_.size(); ++i) {
            n += bits_[i] != o.bits_.at(i) ? 1 : 0;
        }
        return n;
    }

    bool operator==(const ActivationPattern& o) const { return bits_ == o.bits_ && points_ == o.points_; }

  private:
    std::size_t points_ = 0;
    std::size_t units_ = 0;
    std::vector<long> offsets_;
    std::vector<char> bits_;
};

/// Alive iff preactivation >= 0 (ties alive, so pieces are closed).
inline ActivationPattern pattern_at(const NetworkSpec& net, const Vec& p, const Dataset& d) {
    ActivationPattern pat(net, d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
        const auto fp = forward(net, p, d.inputs[k]);
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            if (!net.layers[l].relu) {
                continue;
            }
            for (Eigen::Index j = 0; j < fp.preactivations[l].size(); ++j) {
                pat.set(k, l, static_cast<std::size_t>(j), fp.preactivations[l][j] >= 0.0);
            }
        }
    }
    return pat;
}

/// Pattern of a single input point (the shape used for input-space pieces).
inline ActivationPattern pattern_at_input(const NetworkSpec& net, const Vec& p, const Vec& x) {
    Dataset one;
    one.push_back(x, Vec::Zero(net.target_dim()));
    return pattern_at(net, p, one);
}

/// Normalized distance to the nearest piece boundary: the minimum over all
/// ReLU components of |preactivation| / (1 + |(A_j, b_j)|), where (A_j, b_j)
/// is the component's own affine row. Zero iff some preactivation is exactly 0.
inline double boundary_distance(const NetworkSpec& net, const Vec& p, const Dataset& d) {
    const auto lay = net.layout();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d.size(); ++k) {
        const auto fp = forward(net, p, d.inputs[k]);
        for (std::size_t l = 0; l < lay.size(); ++l) {
            if (!net.layers[l].relu) {
                continue;
            }
            const auto W = weights(p, lay[l]);
            const auto b = bias(p, lay[l]);
            for (Eigen::Index j = 0; j < W.rows(); ++j) {
                const double row = std::sqrt(W.row(j).squaredNorm() + b[j] * b[j]);
                best = std::min(best, std::abs(fp.preactivations[l][j]) / (1.0 + row));
            }
        }
    }
    return best;
}

/// Variable space of a piece: the network input, or the parameters of one layer.
struct PieceSpace {
    enum class Kind { input, layer } kind = Kind::input;
    std::size_t layer = 0;

    static PieceSpace input() { return {Kind::input, 0}; }
    static PieceSpace of_layer(std::size_t m) { return {Kind::layer, m}; }

    [[nodiscard]] Eigen::Index dim(const NetworkSpec& net) const {
        if (kind == Kind::input) {
            return net.input_dim();
        }
        const auto& l = net.layers.at(layer);
        return static_cast<Eigen::Index>(l.in_dim) * l.out_dim + l.out_dim;
    }
};

/// Network output as an affine function G z + g of the piece variable z,
/// valid while the frozen pattern holds.
struct AffineMap {
    Mat G;
    Vec g;
};

namespace detail {

/// Propagates one data point through the network with every ReLU replaced by
/// its frozen 0/1 gate, as an affine map of the piece variable. Emits one
/// halfspace per gated component whose bit index is below `assigned`;
/// returns nullopt if it stopped at an unassigned bit.
inline std::optional<AffineMap> frozen_propagate(const NetworkSpec& net, const Vec& p, const Vec& x,
                                                 std::size_t point, const ActivationPattern& pattern,
                                                 const PieceSpace& space, std::size_t assigned, HPolytope& piece) {
    const auto lay = net.layout();
    const Eigen::Index nz = space.dim(net);
    AffineMap cur;
    if (space.kind == PieceSpace::Kind::input) {
        cur.G = Mat::Identity(nz, nz);
        cur.g = Vec::Zero(nz);
    } else {
        cur.G = Mat::Zero(x.size(), nz);
        cur.g = x;
    }
    for (std::size_t l = 0; l < lay.size(); ++l) {
        AffineMap pre;
        if (space.kind == PieceSpace::Kind::layer && space.layer == l) {
            // Upstream is constant in this layer's parameters (cur.G == 0):
            // pre_j = sum_i A_ji y_i + b_j with y = cur.g; row-major weight order.
            const int rows = lay[l].rows;
            const int cols = lay[l].cols;
            pre.G = Mat::Zero(rows, nz);
            for (int j = 0; j < rows; ++j) {
                for (int i = 0; i < cols; ++i) {
                    pre.G(j, j * cols + i) = cur.g[i];
                }
                pre.G(j, rows * cols + j) = 1.0;
            }
            pre.g = Vec::Zero(rows);
        } else {
            const auto W = weights(p, lay[l]);
            pre.G = W * cur.G;
            pre.g = W * cur.g + bias(p, lay[l]);
        }
        if (net.layers[l].relu) {
            for (Eigen::Index j = 0; j < pre.g.size(); ++j) {
                const std::size_t bit = pattern.index(point, l, static_cast<std::size_t>(j));
                if (bit >= assigned) {
                    return std::nullopt;
                }
                if (pattern.bit(bit)) {
                    // pre_j >= 0
                    piece.add(-pre.G.row(j).transpose(), pre.g[j]);
                } else {
                    // pre_j <= 0, output gated to zero
                    piece.add(pre.G.row(j).transpose(), -pre.g[j]);
                    pre.G.row(j).setZero();
                    pre.g[j] = 0.0;
                }
            }
        }
        cur = std::move(pre);
    }
    return cur;
}

} // namespace detail

/// Piece of the network in input space labelled by a single-point `pattern`,
/// together with the affine map the network reduces to on it.
struct InputPiece {
    HPolytope polytope;
    AffineMap output;
};

inline InputPiece input_piece_with_map(const NetworkSpec& net, const Vec& p, const ActivationPattern& pattern) {
    check_params(net, p);
    if (pattern.points() != 1 || pattern.units_per_point() != net.relu_units()) {
        throw InputError("input-space pattern must describe exactly one point of this network");
    }
    InputPiece out{HPolytope(net.input_dim()), {}};
    const Vec unused = Vec::Zero(net.input_dim());
    out.output = *detail::frozen_propagate(net, p, unused, 0, pattern, PieceSpace::input(), pattern.size(),
                                           out.polytope);
    return out;
}

inline HPolytope input_piece(const NetworkSpec& net, const Vec& p, const ActivationPattern& pattern) {
    return input_piece_with_map(net, p, pattern).polytope;
}

/// Per-point output maps G_k theta + g_k over the parameters theta of layer m
/// (row-major weights, then bias), with every pattern frozen.
struct LayerPiece {
    HPolytope polytope;
    std::vector<AffineMap> outputs;
};

inline LayerPiece layer_param_piece_with_maps(const NetworkSpec& net, const Vec& p, std::size_t m,
                                              const Dataset& d, const ActivationPattern& pattern) {
    check_params(net, p);
    d.validate(net);
    if (m >= net.layers.size()) {
        throw InputError("layer index " + std::to_string(m) + " out of range");
    }
    if (pattern.points() != d.size() || pattern.units_per_point() != net.relu_units()) {
        throw InputError("pattern shape does not match network and dataset");
    }
    const auto space = PieceSpace::of_layer(m);
    LayerPiece out{HPolytope(space.dim(net)), {}};
    for (std::size_t k = 0; k < d.size(); ++k) {
        out.outputs.push_back(
            *detail::frozen_propagate(net, p, d.inputs[k], k, pattern, space, pattern.size(), out.polytope));
    }
    return out;
}

inline HPolytope layer_param_piece(const NetworkSpec& net, const Vec& p, std::size_t m, const Dataset& d,
                                   const ActivationPattern& pattern) {
    return layer_param_piece_with_maps(net, p, m, d, pattern).polytope;
}

struct Piece {
    ActivationPattern pattern;
    HPolytope polytope;
};

/// Refusal to enumerate more ReLU components than the cap allows.
class CapExceeded : public RefusalError {
  public:
    CapExceeded(std::size_t count, std::size_t cap)
        : RefusalError("piece enumeration needs " + std::to_string(count) + " ReLU components, cap is " +
                       std::to_string(cap)),
          count_(count) {}
    [[nodiscard]] std::size_t count() const { return count_; }

  private:
    std::size_t count_;
};

/// All full-dimensional pieces of the network in `space`, in lexicographic
/// pattern order.
///
/// For input space the pattern covers one point and `d` is unused. For layer
/// m the bits of layers above m are fixed by `p` (they do not depend on the
/// layer's parameters) and the remaining M * (ReLU units at or after m) bits
/// are enumerated. A depth-first search prunes every prefix whose polytope is
/// already lower-dimensional.
inline std::vector<Piece> enumerate_pieces(const NetworkSpec& net, const Vec& p, const Dataset& d,
                                           const PieceSpace& space, std::size_t cap = 20,
                                           double slack_tol = 1e-9) {
    check_params(net, p);
    const std::size_t points = space.kind == PieceSpace::Kind::input ? 1 : d.size();
    if (space.kind == PieceSpace::Kind::layer) {
        d.validate(net);
        if (space.layer >= net.layers.size()) {
            throw InputError("layer index " + std::to_string(space.layer) + " out of range");
        }
    }
    ActivationPattern pattern(net, points);
    std::vector<char> free_bit(pattern.size(), 1);
    if (space.kind == PieceSpace::Kind::layer) {
        const auto at_p = pattern_at(net, p, d);
        for (std::size_t k = 0; k < points; ++k) {
            for (std::size_t l = 0; l < space.layer; ++l) {
                if (!net.layers[l].relu) {
                    continue;
                }
                for (int j = 0; j < net.layers[l].out_dim; ++j) {
                    const auto i = pattern.index(k, l, static_cast<std::size_t>(j));
                    pattern.set_bit(i, at_p.bit(i));
                    free_bit[i] = 0;
                }
            }
        }
    }
    const auto count = static_cast<std::size_t>(std::count(free_bit.begin(), free_bit.end(), 1));
    if (count > cap) {
        throw CapExceeded(count, cap);
    }

    const Vec zero_input = Vec::Zero(net.input_dim());
    auto polytope_for_prefix = [&](std::size_t assigned) {
        HPolytope poly(space.dim(net));
        for (std::size_t k = 0; k < points; ++k) {
            const Vec& x = space.kind == PieceSpace::Kind::input ? zero_input : d.inputs[k];
            if (!detail::frozen_propagate(net, p, x, k, pattern, space, assigned, poly)) {
                break;
            }
        }
        return poly;
    };

    std::vector<Piece> out;
    auto dfs = [&](auto&& self, std::size_t i) -> void {
        while (i < pattern.size() && !free_bit[i]) {
            ++i;
        }
        auto poly = polytope_for_prefix(i);
        if (!is_full_dimensional(poly, slack_tol)) {
            return;
        }
        if (i == pattern.size()) {
            out.push_back({pattern, std::move(poly)});
            return;
        }
        pattern.set_bit(i, false);
        self(self, i + 1);
        pattern.set_bit(i, true);
        self(self, i + 1);
        pattern.set_bit(i, false);
    };
    dfs(dfs, 0);
    return out;
}

/// Subset of parameter space that agrees with `base` outside `index_set`.
struct CrossSection {
    Vec base;
    IndexSet index_set;

    [[nodiscard]] Vec point(const Vec& free_values) const { return splice(base, index_set, free_values); }
};

inline double cross_section_eval(const NetworkSpec& net, const Dataset& d, const CrossSection& cs,
                                 const Vec& free_values) {
    return loss(net, cs.point(free_values), d);
}

} // namespace pwmc
