#pragma once

#include "pwmc/lp.hpp"
#include "pwmc/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pwmc {

/// Closed convex polytope { z : normal_i . z <= offset_i for all i }.
///
/// Rows with a zero normal never reach the row list: 0.z <= c is dropped
/// when c >= 0 and makes the set empty when c < 0.
class HPolytope {
  public:
    HPolytope() = default;
    explicit HPolytope(Eigen::Index dim) : dim_(dim), normals_(0, dim) {}

    void add(const Vec& normal, double offset) {
        if (normal.size() != dim_) {
            throw InputError("halfspace normal has dimension " + std::to_string(normal.size()) +
                             ", polytope has " + std::to_string(dim_));
        }
        if (normal.cwiseAbs().maxCoeff() == 0.0) {
            if (offset < 0.0) {
                empty_ = true;
            }
            return;
        }
        normals_.conservativeResize(normals_.rows() + 1, dim_);
        normals_.row(normals_.rows() - 1) = normal.transpose();
        offsets_.conservativeResize(offsets_.size() + 1);
        offsets_[offsets_.size() - 1] = offset;
    }

    [[nodiscard]] Eigen::Index dim() const { return dim_; }
    [[nodiscard]] Eigen::Index rows() const { return normals_.rows(); }
    [[nodiscard]] bool trivially_empty() const { return empty_; }
    [[nodiscard]] const Mat& normals() const { return normals_; }
    [[nodiscard]] const Vec& offsets() const { return offsets_; }

    /// Largest scaled violation max_i (n_i.z - c_i) / max(1, |n_i|); <= 0 inside.
    [[nodiscard]] double violation(const Vec& z) const {
        if (empty_) {
            return std::numeric_limits<double>::infinity();
        }
        double worst = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < rows(); ++i) {
            const double scale = std::max(1.0, normals_.row(i).norm());
            worst = std::max(worst, (normals_.row(i).dot(z) - offsets_[i]) / scale);
        }
        return rows() == 0 ? 0.0 : worst;
    }

    [[nodiscard]] bool contains(const Vec& z, double tol = 1e-10) const { return violation(z) <= tol; }

    /// Euclidean distance from an interior point to the nearest bounding hyperplane
    /// (negative outside, +inf for the whole space).
    [[nodiscard]] double boundary_distance(const Vec& z) const {
        if (empty_) {
            return -std::numeric_limits<double>::infinity();
        }
        double d = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < rows(); ++i) {
            d = std::min(d, (offsets_[i] - normals_.row(i).dot(z)) / normals_.row(i).norm());
        }
        return d;
    }

    /// Restriction to the coordinates `idx`, the others fixed to `base`.
    [[nodiscard]] HPolytope slice(const Vec& base, const IndexSet& idx) const {
        HPolytope out(static_cast<Eigen::Index>(idx.size()));
        out.empty_ = empty_;
        const IndexSet rest = complement(idx, static_cast<std::size_t>(dim_));
        for (Eigen::Index i = 0; i < rows(); ++i) {
            Vec n(static_cast<Eigen::Index>(idx.size()));
            for (std::size_t j = 0; j < idx.size(); ++j) {
                n[static_cast<Eigen::Index>(j)] = normals_(i, static_cast<Eigen::Index>(idx[j]));
            }
            double c = offsets_[i];
            for (auto j : rest) {
                c -= normals_(i, static_cast<Eigen::Index>(j)) * base[static_cast<Eigen::Index>(j)];
            }
            out.add(n, c);
        }
        return out;
    }

    /// Intersection with another polytope of the same dimension.
    void append(const HPolytope& other) {
        for (Eigen::Index i = 0; i < other.rows(); ++i) {
            add(other.normals_.row(i).transpose(), other.offsets_[i]);
        }
        empty_ = empty_ || other.empty_;
    }

  private:
    Eigen::Index dim_ = 0;
    Mat normals_;
    Vec offsets_;
    bool empty_ = false;
};

struct InteriorBall {
    bool feasible = false;
    Vec center;
    double radius = 0.0;
};

/// Largest ball (radius capped at `max_radius`) inside the polytope, found by
/// maximizing a common slack s in  n_i.z + |n_i| s <= c_i.
/// An optional box |z_j - box_center_j| <= box_radius is intersected first.
inline InteriorBall chebyshev_center(const HPolytope& p, double max_radius = 1.0,
                                     const std::optional<std::pair<Vec, double>>& box = std::nullopt) {
    InteriorBall out;
    if (p.trivially_empty()) {
        return out;
    }
    const auto n = p.dim();
    const Eigen::Index box_rows = box ? 2 * n : 0;
    const Eigen::Index m = p.rows() + box_rows + 2;
    Mat A = Mat::Zero(m, n + 1);
    Vec b = Vec::Zero(m);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < p.rows(); ++i, ++r) {
        const double norm = p.normals().row(i).norm();
        A.block(r, 0, 1, n) = p.normals().row(i) / norm;
        A(r, n) = 1.0;
        b[r] = p.offsets()[i] / norm;
    }
    if (box) {
        for (Eigen::Index j = 0; j < n; ++j) {
            A(r, j) = 1.0;
            A(r, n) = 1.0;
            b[r++] = box->first[j] + box->second;
            A(r, j) = -1.0;
            A(r, n) = 1.0;
            b[r++] = -box->first[j] + box->second;
        }
    }
    A(r, n) = 1.0; // s <= max_radius
    b[r++] = max_radius;
    A(r, n) = -1.0; // s >= 0
    b[r++] = 0.0;
    Vec c = Vec::Zero(n + 1);
    c[n] = 1.0;
    const auto res = solve_lp_free(A, b, c);
    if (res.status != LPStatus::optimal) {
        return out;
    }
    out.feasible = true;
    out.center = res.x.head(n);
    out.radius = res.x[n];
    return out;
}

/// Full-dimensional iff some ball of radius > `slack_tol` fits inside.
inline bool is_full_dimensional(const HPolytope& p, double slack_tol = 1e-9) {
    const auto ball = chebyshev_center(p);
    return ball.feasible && ball.radius > slack_tol;
}

/// Axis-aligned bounds of the polytope intersected with the box
/// |z - center| <= radius (coordinatewise), by 2n linear programs.
inline std::pair<Vec, Vec> bounding_box(const HPolytope& p, const Vec& center, double radius) {
    const auto n = p.dim();
    Mat A(p.rows() + 2 * n, n);
    Vec b(p.rows() + 2 * n);
    A.topRows(p.rows()) = p.normals();
    b.head(p.rows()) = p.offsets();
    for (Eigen::Index j = 0; j < n; ++j) {
        A.row(p.rows() + 2 * j) = Vec::Unit(n, j).transpose();
        b[p.rows() + 2 * j] = center[j] + radius;
        A.row(p.rows() + 2 * j + 1) = -Vec::Unit(n, j).transpose();
        b[p.rows() + 2 * j + 1] = -center[j] + radius;
    }
    Vec lo = center.array() - radius;
    Vec hi = center.array() + radius;
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto up = solve_lp_free(A, b, Vec::Unit(n, j));
        const auto down = solve_lp_free(A, b, -Vec::Unit(n, j));
        if (up.status == LPStatus::optimal) {
            hi[j] = up.objective;
        }
        if (down.status == LPStatus::optimal) {
            lo[j] = -down.objective;
        }
    }
    return {lo, hi};
}

} // namespace pwmc
