#pragma once

#include "pwmc/polytope.hpp"
#include "pwmc/problem.hpp"
#include "pwmc/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace pwmc {

enum class NormKind { l2, l1 };

inline std::string to_string(NormKind n) { return n == NormKind::l2 ? "l2" : "l1"; }

inline NormKind norm_from_string(const std::string& s) {
    if (s == "l2") {
        return NormKind::l2;
    }
    if (s == "l1") {
        return NormKind::l1;
    }
    throw InputError("unknown norm '" + s + "'");
}

inline double norm_of(const Vec& x, NormKind kind) {
    return kind == NormKind::l2 ? x.norm() : x.lpNorm<1>();
}

/// lambda * |x| on a cross-section: the free block u plus a fixed block whose
/// contribution is summarized by its own norm.
///   l2: lambda * sqrt(|u|^2 + c^2)     l1: lambda * (|u|_1 + c)
struct SectionNorm {
    NormKind kind = NormKind::l2;
    double lambda = 0.0;
    double fixed = 0.0;

    SectionNorm() = default;
    SectionNorm(NormKind k, double lam, const Vec& base, const IndexSet& free)
        : kind(k), lambda(lam), fixed(norm_of(gather(base, complement(free, static_cast<std::size_t>(base.size()))), k)) {}

    [[nodiscard]] double value(const Vec& u) const {
        if (lambda == 0.0) {
            return 0.0;
        }
        if (kind == NormKind::l2) {
            return lambda * std::sqrt(u.squaredNorm() + fixed * fixed);
        }
        return lambda * (u.lpNorm<1>() + fixed);
    }

    /// argmin_u  step * value(u) + |u - v|^2 / 2
    [[nodiscard]] Vec prox(const Vec& v, double step) const {
        const double tau = step * lambda;
        if (tau == 0.0) {
            return v;
        }
        if (kind == NormKind::l1) {
            return v.unaryExpr([tau](double a) { return std::copysign(std::max(std::abs(a) - tau, 0.0), a); });
        }
        const double r = v.norm();
        if (r == 0.0) {
            return v;
        }
        if (fixed == 0.0) {
            return v * (std::max(r - tau, 0.0) / r);
        }
        // The minimizer is v scaled to length t solving  tau t / sqrt(t^2 + c^2) + t - r = 0,
        // whose left side increases on [0, r].
        double lo = 0.0;
        double hi = r;
        for (int it = 0; it < 200 && hi - lo > 1e-17 * r; ++it) {
            const double t = 0.5 * (lo + hi);
            const double phi = tau * t / std::sqrt(t * t + fixed * fixed) + t - r;
            (phi > 0.0 ? hi : lo) = t;
        }
        return v * (0.5 * (lo + hi) / r);
    }
};

namespace detail {

/// Primal active-set method for min |x - v|^2 / 2 s.t. A x <= b, started from
/// a feasible x. The working set stays linearly independent, so every
/// equality-constrained step is well defined; terminates when all multipliers
/// are nonnegative.
inline Vec active_set_projection(const Mat& A, const Vec& b, const Vec& v, Vec x, int max_steps = 1000) {
    const Eigen::Index m = A.rows();
    std::vector<Eigen::Index> work;
    auto rows_of = [&](const std::vector<Eigen::Index>& w) {
        Mat Aw(static_cast<Eigen::Index>(w.size()), A.cols());
        for (std::size_t k = 0; k < w.size(); ++k) {
            Aw.row(static_cast<Eigen::Index>(k)) = A.row(w[k]);
        }
        return Aw;
    };
    auto tolerance = [&](Eigen::Index i) { return 1e-10 * std::max(1.0, A.row(i).norm()) * (1.0 + x.norm()); };
    // independent subset of the rows active at x
    for (Eigen::Index i = 0; i < m; ++i) {
        if (A.row(i).dot(x) - b[i] >= -tolerance(i)) {
            auto trial = work;
            trial.push_back(i);
            const Mat Aw = rows_of(trial);
            if (Aw.fullPivLu().rank() == static_cast<Eigen::Index>(trial.size())) {
                work = std::move(trial);
            }
        }
    }
    for (int it = 0; it < max_steps; ++it) {
        Vec step = v - x;
        Vec mu;
        if (!work.empty()) {
            const Mat Aw = rows_of(work);
            const Mat gram = Aw * Aw.transpose();
            mu = gram.ldlt().solve(Aw * (v - x));
            step -= Aw.transpose() * mu;
        }
        if (step.norm() <= 1e-14 * (1.0 + x.norm() + v.norm())) {
            if (work.empty()) {
                return x;
            }
            Eigen::Index worst = 0;
            if (mu.minCoeff(&worst) >= -1e-13 * (1.0 + mu.cwiseAbs().maxCoeff())) {
                return x;
            }
            work.erase(work.begin() + worst);
            continue;
        }
        double alpha = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (std::find(work.begin(), work.end(), i) != work.end()) {
                continue;
            }
            const double rate = A.row(i).dot(step);
            if (rate > 1e-14 * A.row(i).norm() * step.norm()) {
                const double room = std::max(0.0, b[i] - A.row(i).dot(x));
                if (room / rate < alpha) {
                    alpha = room / rate;
                    blocking = i;
                }
            }
        }
        x += alpha * step;
        if (blocking >= 0) {
            work.push_back(blocking);
        }
    }
    return x;
}

} // namespace detail

/// Euclidean projection onto a polytope.
///
/// Cyclic projections onto the violated halfspaces bring the point to within
/// `feas_tol` of the polytope (the inner loop); a primal active-set pass from
/// there makes the projection exact.
inline Vec project_onto(const HPolytope& poly, const Vec& v, double feas_tol = 1e-10, int max_sweeps = 100000) {
    if (poly.trivially_empty()) {
        throw InputError("cannot project onto an empty polytope");
    }
    if (poly.violation(v) <= 0.0) {
        return v;
    }
    const Mat& A = poly.normals();
    const Vec& b = poly.offsets();
    const Eigen::Index m = poly.rows();
    Vec x = v;
    for (int sweep = 0; sweep < max_sweeps && poly.violation(x) > feas_tol; ++sweep) {
        for (Eigen::Index i = 0; i < m; ++i) {
            const double excess = A.row(i).dot(x) - b[i];
            if (excess > 0.0) {
                x -= (excess / A.row(i).squaredNorm()) * A.row(i).transpose();
            }
        }
    }
    if (poly.violation(x) > feas_tol) {
        throw ConvergenceError("no feasible point found for projection; polytope may be empty");
    }
    return detail::active_set_projection(A, b, v, x);
}

/// argmin_u  step * norm(u) + indicator(u in poly) + |u - v|^2 / 2.
///
/// Accelerated projected ascent on the dual of the halfspace constraints:
/// for multipliers mu >= 0 the inner minimizer is the norm prox at
/// v - A^T mu. The last primal iterate is projected onto the polytope, so the
/// result is always feasible.
inline Vec prox_norm_on_polytope(const SectionNorm& norm, const HPolytope& poly, const Vec& v, double step,
                                 int max_iters = 20000) {
    if (norm.lambda == 0.0 || poly.rows() == 0) {
        return poly.rows() == 0 ? norm.prox(v, step) : project_onto(poly, v);
    }
    const Vec direct = norm.prox(v, step);
    if (poly.violation(direct) <= 0.0) {
        return direct;
    }
    Mat A = poly.normals();
    Vec b = poly.offsets();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double r = A.row(i).norm();
        A.row(i) /= r;
        b[i] /= r;
    }
    const double lip = std::max(1e-12, A.operatorNorm() * A.operatorNorm());
    Vec mu = Vec::Zero(A.rows());
    Vec nu = mu;
    double t = 1.0;
    Vec u = direct;
    const double scale = 1.0 + v.norm();
    for (int it = 0; it < max_iters; ++it) {
        u = norm.prox(v - A.transpose() * nu, step);
        const Vec mu_next = (nu + (A * u - b) / lip).cwiseMax(0.0);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        nu = mu_next + ((t - 1.0) / t_next) * (mu_next - mu);
        const double moved = (mu_next - mu).norm();
        mu = mu_next;
        t = t_next;
        if (moved <= 1e-15 * (1.0 + mu.norm())) {
            u = norm.prox(v - A.transpose() * mu, step);
            const Vec slack = A * u - b;
            if (slack.maxCoeff() <= 1e-12 * scale && std::abs(mu.dot(slack)) <= 1e-12 * scale) {
                break;
            }
        }
    }
    u = norm.prox(v - A.transpose() * mu, step);
    return project_onto(poly, u);
}

struct SubproblemOptions {
    double tol = 1e-9;     // proximal-gradient mapping norm
    int max_iters = 50000;
};

struct SubproblemResult {
    Vec u;               // free coordinates
    Vec point;           // spliced full vector
    double objective = 0.0; // restricted active function + regularizer
    double mapping_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    bool direct = false;
};

/// Solves  min phi(u) + lambda |splice(u)|  over u in the piece's cross-section,
/// phi being the (convex) restricted active function.
///
/// Accelerated proximal gradient with backtracking and function-value
/// restart; the nonsmooth part is the regularizer plus the polytope
/// indicator. With lambda = 0 and a least-squares form, the normal equations
/// are tried first (minimum-norm step from the start point) and used when
/// the result lies in the piece and is stationary.
inline SubproblemResult prox_subproblem_solve(const Restriction& r, double lambda, NormKind norm_kind,
                                              const SubproblemOptions& opt = {}) {
    if (lambda < 0.0) {
        throw InputError("lambda must be nonnegative");
    }
    if (r.piece.trivially_empty()) {
        throw InputError("subproblem piece is empty");
    }
    const SectionNorm reg(norm_kind, lambda, r.base, r.index_set);
    auto total = [&](const Vec& u) { return r.value(u) + reg.value(u); };
    // With a fixed block of norm c the l2 term sqrt(|u|^2 + c^2) is smooth
    // with curvature lambda / c; for moderate c it joins the gradient step and
    // only the polytope needs a prox. Near c = 0 the prox handles it instead.
    const bool smooth_reg = lambda > 0.0 && norm_kind == NormKind::l2 && reg.fixed >= 1e-3;
    const SectionNorm prox_reg = smooth_reg ? SectionNorm{} : reg;
    auto smooth_value = [&](const Vec& u) { return smooth_reg ? total(u) : r.value(u); };
    auto smooth_grad = [&](const Vec& u) {
        Vec g = r.gradient(u);
        if (smooth_reg) {
            g += lambda * u / std::sqrt(u.squaredNorm() + reg.fixed * reg.fixed);
        }
        return g;
    };

    SubproblemResult res;
    const Vec start = project_onto(r.piece, r.start());

    if (lambda == 0.0 && r.least_squares) {
        const auto& ls = *r.least_squares;
        const Vec delta = ls.J.completeOrthogonalDecomposition().solve(ls.r - ls.J * start);
        const Vec u = start + delta;
        const Vec g = r.gradient(u);
        const double gscale = 1.0 + 2.0 * ls.scale * (ls.J.transpose() * ls.r).norm();
        if (r.piece.contains(u, 1e-10) && g.norm() <= std::max(opt.tol, 1e-9 * gscale)) {
            res.u = u;
            res.point = r.point(u);
            res.objective = total(u);
            res.mapping_norm = g.norm();
            res.converged = true;
            res.direct = true;
            return res;
        }
    }

    // Lipschitz estimate for the first step size.
    double step = 1.0;
    {
        const Vec g0 = smooth_grad(start);
        Vec probe = start + Vec::Constant(start.size(), 1e-4) * (1.0 + start.norm());
        const Vec g1 = smooth_grad(probe);
        const double lip = (g1 - g0).norm() / (probe - start).norm();
        if (std::isfinite(lip) && lip > 1e-12) {
            step = 1.0 / lip;
        }
    }

    Vec x = start;
    double fx = total(x);
    Vec y = x;
    double t = 1.0;
    for (int it = 1; it <= opt.max_iters; ++it) {
        res.iterations = it;
        const double phi_y = smooth_value(y);
        const Vec g = smooth_grad(y);
        Vec z;
        Vec d;
        for (int bt = 0; bt < 80; ++bt) {
            z = prox_norm_on_polytope(prox_reg, r.piece, y - step * g, step);
            d = z - y;
            if (smooth_value(z) <= phi_y + g.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-14 * (1.0 + std::abs(phi_y))) {
                break;
            }
            step *= 0.5;
        }
        const double mapping = d.norm() / step;
        const double fz = total(z);
        if (fz > fx + 1e-14 * (1.0 + std::abs(fx))) {
            if (y == x) {
                // no descent even without momentum: numerically stationary
                res.mapping_norm = mapping;
                res.converged = mapping <= opt.tol;
                break;
            }
            // restart momentum from the best point
            y = x;
            t = 1.0;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = z + ((t - 1.0) / t_next) * (z - x);
        x = z;
        fx = fz;
        t = t_next;
        res.mapping_norm = mapping;
        if (mapping <= opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.u = x;
    res.point = r.point(x);
    res.objective = fx;
    return res;
}

} // namespace pwmc
