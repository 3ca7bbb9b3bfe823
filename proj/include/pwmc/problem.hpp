#pragma once

#include "pwmc/evaluate.hpp"
#include "pwmc/pieces.hpp"
#include "pwmc/polytope.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace pwmc {

/// value(u) = scale * |J u - r|^2; lets convex least-squares subproblems be
/// solved directly.
struct LeastSquaresForm {
    Mat J;
    Vec r;
    double scale = 1.0;
};

/// The active function of the piece containing `base`, restricted to the
/// cross-section through `base` along `index_set`. Coordinates u are the
/// values of the free indices; `piece` is the piece's cross-section in u.
struct Restriction {
    Vec base;
    IndexSet index_set;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    HPolytope piece;
    std::optional<LeastSquaresForm> least_squares;

    [[nodiscard]] Vec start() const { return gather(base, index_set); }
    [[nodiscard]] Vec point(const Vec& u) const { return splice(base, index_set, u); }
};

/// Cross-section of a piece in free coordinates: a polytope plus an optional
/// exact membership test for sections that are not polyhedral.
struct SectionRegion {
    HPolytope polytope;
    std::function<bool(const Vec&)> member;
};

/// Continuous piecewise multi-convex objective on R^n.
///
/// `gradient` is the gradient of the active function of the closed piece
/// selected at x (one-sided on boundaries). `restrict_to_piece` must return a
/// restriction that is convex on its polytope, or throw RefusalError.
class PiecewiseObjective {
  public:
    virtual ~PiecewiseObjective() = default;

    [[nodiscard]] virtual std::size_t dim() const = 0;
    [[nodiscard]] virtual double value(const Vec& x) const = 0;
    [[nodiscard]] virtual Vec gradient(const Vec& x) const = 0;
    [[nodiscard]] virtual double boundary_distance(const Vec& x) const = 0;
    [[nodiscard]] virtual Restriction restrict_to_piece(const Vec& base, const IndexSet& index_set) const = 0;
    [[nodiscard]] virtual SectionRegion section_region(const Vec& base, const IndexSet& index_set) const {
        return {restrict_to_piece(base, index_set).piece, nullptr};
    }
    /// A lower bound on the objective (inf f).
    [[nodiscard]] virtual double lower_bound() const { return 0.0; }
    /// Identifier of the piece selected at x.
    [[nodiscard]] virtual std::string piece_label(const Vec& /*x*/) const { return {}; }
};

/// Mean training objective of a network over a dataset.
class NetworkObjective final : public PiecewiseObjective {
  public:
    NetworkObjective(NetworkSpec net, Dataset data) : net_(std::move(net)), data_(std::move(data)) {
        net_.validate();
        data_.validate(net_);
    }

    [[nodiscard]] const NetworkSpec& network() const { return net_; }
    [[nodiscard]] const Dataset& data() const { return data_; }

    [[nodiscard]] std::size_t dim() const override { return net_.param_count(); }
    [[nodiscard]] double value(const Vec& p) const override { return loss(net_, p, data_); }
    [[nodiscard]] Vec gradient(const Vec& p) const override { return grad(net_, p, data_); }
    [[nodiscard]] double boundary_distance(const Vec& p) const override {
        return pwmc::boundary_distance(net_, p, data_);
    }
    [[nodiscard]] std::string piece_label(const Vec& p) const override {
        return pattern_at(net_, p, data_).to_string();
    }

    /// Index sets inside one layer's block: the frozen-pattern loss is a convex
    /// function of an affine map of the free coordinates.
    [[nodiscard]] Restriction restrict_to_piece(const Vec& base, const IndexSet& index_set) const override {
        const int m = net_.owning_layer(index_set);
        if (m < 0) {
            throw RefusalError("index set spans several layers; the frozen-pattern objective is not convex on it");
        }
        const auto block = net_.layout()[static_cast<std::size_t>(m)];
        const auto pattern = pattern_at(net_, base, data_);
        const auto lp = layer_param_piece_with_maps(net_, base, static_cast<std::size_t>(m), data_, pattern);

        IndexSet local;
        for (auto i : index_set) {
            local.push_back(i - block.offset);
        }
        const Vec theta = base.segment(static_cast<Eigen::Index>(block.offset), static_cast<Eigen::Index>(block.size()));
        const IndexSet rest = complement(local, block.size());

        auto jacobians = std::make_shared<std::vector<Mat>>();
        auto offsets = std::make_shared<std::vector<Vec>>();
        for (const auto& map : lp.outputs) {
            Mat J(map.G.rows(), static_cast<Eigen::Index>(local.size()));
            for (std::size_t c = 0; c < local.size(); ++c) {
                J.col(static_cast<Eigen::Index>(c)) = map.G.col(static_cast<Eigen::Index>(local[c]));
            }
            Vec c0 = map.g;
            for (auto j : rest) {
                c0 += map.G.col(static_cast<Eigen::Index>(j)) * theta[static_cast<Eigen::Index>(j)];
            }
            jacobians->push_back(std::move(J));
            offsets->push_back(std::move(c0));
        }

        Restriction r;
        r.base = base;
        r.index_set = index_set;
        r.piece = lp.polytope.slice(theta, local);
        const auto obj = net_.objective;
        const auto* targets = &data_.targets;
        const double inv_m = 1.0 / static_cast<double>(data_.size());
        r.value = [=](const Vec& u) {
            double total = 0.0;
            for (std::size_t k = 0; k < jacobians->size(); ++k) {
                total += obj.value((*jacobians)[k] * u + (*offsets)[k], (*targets)[k]);
            }
            return total * inv_m;
        };
        r.gradient = [=](const Vec& u) {
            Vec g = Vec::Zero(u.size());
            for (std::size_t k = 0; k < jacobians->size(); ++k) {
                g += (*jacobians)[k].transpose() * obj.gradient((*jacobians)[k] * u + (*offsets)[k], (*targets)[k]);
            }
            return Vec(g * inv_m);
        };
        if (obj.kind == ObjectiveKind::squared_error) {
            Eigen::Index rows = 0;
            for (const auto& J : *jacobians) {
                rows += J.rows();
            }
            LeastSquaresForm ls{Mat(rows, static_cast<Eigen::Index>(local.size())), Vec(rows), inv_m};
            Eigen::Index at = 0;
            for (std::size_t k = 0; k < jacobians->size(); ++k) {
                const auto h = (*jacobians)[k].rows();
                ls.J.middleRows(at, h) = (*jacobians)[k];
                ls.r.segment(at, h) = data_.targets[k] - (*offsets)[k];
                at += h;
            }
            r.least_squares = std::move(ls);
        }
        return r;
    }

    /// Layer-aligned sections are polyhedral; other sections are described by
    /// exact pattern membership (they need not be convex).
    [[nodiscard]] SectionRegion section_region(const Vec& base, const IndexSet& index_set) const override {
        if (net_.owning_layer(index_set) >= 0) {
            return {restrict_to_piece(base, index_set).piece, nullptr};
        }
        const auto pattern = pattern_at(net_, base, data_);
        SectionRegion out{HPolytope(static_cast<Eigen::Index>(index_set.size())), nullptr};
        if (net_.relu_units() > 0) {
            out.member = [this, base, index_set, pattern](const Vec& u) {
                return pattern_at(net_, splice(base, index_set, u), data_) == pattern;
            };
        }
        return out;
    }

  private:
    NetworkSpec net_;
    Dataset data_;
};

/// One piece of an explicitly given piecewise function: the active function
/// and its closed polytope.
struct FunctionPiece {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    HPolytope polytope;
};

/// Piecewise objective assembled from callables; used for small analytic
/// fixtures (|x|, min(x, x^4), xy, ...).
class FunctionObjective final : public PiecewiseObjective {
  public:
    using PieceSelector = std::function<FunctionPiece(const Vec&)>;

    FunctionObjective(std::size_t dim, std::function<double(const Vec&)> value, PieceSelector piece_of,
                      std::function<double(const Vec&)> boundary = nullptr, double lower = 0.0)
        : dim_(dim), value_(std::move(value)), piece_of_(std::move(piece_of)), boundary_(std::move(boundary)),
          lower_(lower) {}

    [[nodiscard]] std::size_t dim() const override { return dim_; }
    [[nodiscard]] double value(const Vec& x) const override { return value_(x); }
    [[nodiscard]] Vec gradient(const Vec& x) const override { return piece_of_(x).gradient(x); }
    [[nodiscard]] double boundary_distance(const Vec& x) const override {
        if (boundary_) {
            return boundary_(x);
        }
        const auto piece = piece_of_(x);
        return piece.polytope.rows() == 0 ? std::numeric_limits<double>::infinity()
                                          : piece.polytope.boundary_distance(x);
    }
    [[nodiscard]] double lower_bound() const override { return lower_; }

    [[nodiscard]] Restriction restrict_to_piece(const Vec& base, const IndexSet& index_set) const override {
        auto piece = piece_of_(base);
        Restriction r;
        r.base = base;
        r.index_set = index_set;
        r.piece = piece.polytope.slice(base, index_set);
        auto fv = piece.value;
        auto fg = piece.gradient;
        r.value = [fv, base, index_set](const Vec& u) { return fv(splice(base, index_set, u)); };
        r.gradient = [fg, base, index_set](const Vec& u) { return gather(fg(splice(base, index_set, u)), index_set); };
        return r;
    }

  private:
    std::size_t dim_;
    std::function<double(const Vec&)> value_;
    PieceSelector piece_of_;
    std::function<double(const Vec&)> boundary_;
    double lower_;
};

} // namespace pwmc
