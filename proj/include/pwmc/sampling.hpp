#pragma once

#include "pwmc/polytope.hpp"
#include "pwmc/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pwmc {

/// No interior point could be found; distinct from a failed audit.
class NoInteriorPoint : public RefusalError {
  public:
    using RefusalError::RefusalError;
};

/// Hit-and-run walk inside a polytope intersected with the box
/// |z - c| <= radius around its Chebyshev center c. Every sample is a member.
class PolytopeSampler {
  public:
    PolytopeSampler(const HPolytope& poly, double box_radius, std::mt19937_64& rng, int thinning = 3)
        : poly_(poly), rng_(rng), thinning_(thinning) {
        const auto ball = chebyshev_center(poly_, box_radius);
        if (!ball.feasible || ball.radius <= 1e-12) {
            throw NoInteriorPoint("polytope has no interior point");
        }
        center_ = ball.center;
        lo_ = center_.array() - box_radius;
        hi_ = center_.array() + box_radius;
        current_ = center_;
    }

    [[nodiscard]] const Vec& center() const { return center_; }

    Vec next() {
        for (int s = 0; s < thinning_; ++s) {
            step();
        }
        return current_;
    }

  private:
    void step() {
        std::normal_distribution<double> normal(0.0, 1.0);
        Vec dir(current_.size());
        for (Eigen::Index i = 0; i < dir.size(); ++i) {
            dir[i] = normal(rng_);
        }
        dir.normalize();
        double tmin = -std::numeric_limits<double>::infinity();
        double tmax = std::numeric_limits<double>::infinity();
        auto clip = [&](double slope, double room) {
            // slope * t <= room
            if (slope > 1e-300) {
                tmax = std::min(tmax, room / slope);
            } else if (slope < -1e-300) {
                tmin = std::max(tmin, room / slope);
            }
        };
        for (Eigen::Index i = 0; i < poly_.rows(); ++i) {
            clip(poly_.normals().row(i).dot(dir), poly_.offsets()[i] - poly_.normals().row(i).dot(current_));
        }
        for (Eigen::Index j = 0; j < dir.size(); ++j) {
            clip(dir[j], hi_[j] - current_[j]);
            clip(-dir[j], current_[j] - lo_[j]);
        }
        if (!(tmin <= tmax)) {
            return;
        }
        std::uniform_real_distribution<double> uni(tmin, tmax);
        current_ += uni(rng_) * dir;
    }

    HPolytope poly_;
    std::mt19937_64& rng_;
    int thinning_;
    Vec center_;
    Vec lo_;
    Vec hi_;
    Vec current_;
};

/// Uniform point of the sphere of `radius` around `center`.
inline Vec sphere_point(const Vec& center, double radius, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec d(center.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d[i] = normal(rng);
    }
    return center + radius * d.normalized();
}

} // namespace pwmc
