#pragma once

#include "pwmc/problem.hpp"
#include "pwmc/prox.hpp"
#include "pwmc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace pwmc {

enum class Verdict { pass, fail, inconclusive };

inline std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::pass:
        return "pass";
    case Verdict::fail:
        return "fail";
    default:
        return "inconclusive";
    }
}

struct Violation {
    std::string location;
    double magnitude = 0.0;
};

/// Outcome of a statistical certification. `inconclusive` is never a pass.
struct AuditReport {
    std::string check;
    std::size_t checks_run = 0;
    std::vector<Violation> violations;
    double worst_slack = -std::numeric_limits<double>::infinity();
    bool inconclusive = false;
    std::map<std::string, double> metrics;

    [[nodiscard]] Verdict verdict() const {
        if (!violations.empty()) {
            return Verdict::fail;
        }
        return inconclusive ? Verdict::inconclusive : Verdict::pass;
    }
    [[nodiscard]] bool passed() const { return verdict() == Verdict::pass; }

    void merge(const AuditReport& other) {
        checks_run += other.checks_run;
        violations.insert(violations.end(), other.violations.begin(), other.violations.end());
        worst_slack = std::max(worst_slack, other.worst_slack);
        inconclusive = inconclusive || other.inconclusive;
    }
};

inline std::string format_point(const Vec& x) {
    std::ostringstream os;
    os.precision(6);
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        os << (i ? "," : "") << x[i];
    }
    os << ')';
    return os.str();
}

/// Midpoint convexity on random chords of a polytope: flags
/// f((a+b)/2) > (f(a)+f(b))/2 + eps. Pairs come from a hit-and-run walk in
/// the polytope intersected with a box of `box_radius` around its Chebyshev
/// center. With `member` set, only pairs whose ends and midpoint satisfy it
/// are counted. Throws NoInteriorPoint when the polytope has no interior.
template <class Evaluator>
AuditReport chord_convexity_test(const Evaluator& f, const HPolytope& poly, std::size_t trials, double eps,
                                 std::mt19937_64& rng, double box_radius = 1.0,
                                 const std::function<bool(const Vec&)>& member = nullptr) {
    AuditReport rep;
    rep.check = "chord_convexity";
    PolytopeSampler sampler(poly, box_radius, rng);
    const std::size_t max_attempts = member ? 50 * trials : trials;
    for (std::size_t attempt = 0; attempt < max_attempts && rep.checks_run < trials; ++attempt) {
        const Vec a = sampler.next();
        const Vec b = sampler.next();
        const Vec mid = 0.5 * (a + b);
        if (member && !(member(a) && member(b) && member(mid))) {
            continue;
        }
        ++rep.checks_run;
        const double slack = f(mid) - 0.5 * (f(a) + f(b));
        rep.worst_slack = std::max(rep.worst_slack, slack);
        if (slack > eps) {
            rep.violations.push_back({"midpoint " + format_point(mid), slack});
        }
    }
    if (rep.checks_run < trials) {
        rep.inconclusive = true;
    }
    return rep;
}

/// Smallest eigenvalue of the central-difference Hessian (step
/// 1e-4 * (1 + |x_i|)) must be >= -eps. Refuses points closer to the
/// polytope boundary than ten steps.
template <class Evaluator>
AuditReport hessian_psd_test(const Evaluator& f, const Vec& x, const HPolytope& piece, double eps,
                             double rel_step = 1e-4) {
    const auto n = x.size();
    Vec h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h[i] = rel_step * (1.0 + std::abs(x[i]));
    }
    const double reach = 10.0 * h.maxCoeff();
    if (piece.boundary_distance(x) <= reach) {
        throw RefusalError("point is within " + format_number(reach) +
                           " of a piece boundary; finite differences would cross pieces");
    }
    Mat H(n, n);
    const double f0 = f(x);
    Vec probe = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        probe[i] = x[i] + h[i];
        const double up = f(probe);
        probe[i] = x[i] - h[i];
        const double down = f(probe);
        probe[i] = x[i];
        H(i, i) = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            double s = 0.0;
            for (int si : {1, -1}) {
                for (int sj : {1, -1}) {
                    probe[i] = x[i] + si * h[i];
                    probe[j] = x[j] + sj * h[j];
                    s += si * sj * f(probe);
                }
            }
            probe[i] = x[i];
            probe[j] = x[j];
            H(i, j) = H(j, i) = s / (4.0 * h[i] * h[j]);
        }
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(H, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    AuditReport rep;
    rep.check = "hessian_psd";
    rep.checks_run = 1;
    rep.worst_slack = -lmin;
    rep.metrics["min_eigenvalue"] = lmin;
    if (lmin < -eps) {
        rep.violations.push_back({"hessian at " + format_point(x), -lmin});
    }
    return rep;
}

/// Chord audit of the objective on every cross-section (one per index set)
/// through each base point, intersected with the piece holding the base.
inline AuditReport multiconvexity_audit(const PiecewiseObjective& obj, const IndexCover& cover,
                                        const std::vector<Vec>& bases, std::size_t trials, double eps,
                                        std::mt19937_64& rng, double box_radius = 1.0) {
    AuditReport rep;
    rep.check = "multiconvexity";
    for (std::size_t b = 0; b < bases.size(); ++b) {
        for (std::size_t s = 0; s < cover.sets.size(); ++s) {
            const auto& idx = cover.sets[s];
            const auto region = obj.section_region(bases[b], idx);
            const Vec& base = bases[b];
            auto f = [&](const Vec& u) { return obj.value(splice(base, idx, u)); };
            auto one = chord_convexity_test(f, region.polytope, trials, eps, rng, box_radius, region.member);
            for (auto& v : one.violations) {
                v.location = "base " + std::to_string(b) + " set " + std::to_string(s) + ": " + v.location;
            }
            rep.merge(one);
        }
    }
    rep.metrics["bases"] = static_cast<double>(bases.size());
    rep.metrics["index_sets"] = static_cast<double>(cover.sets.size());
    return rep;
}

/// Network form: `samples` Gaussian base points (scale `param_scale`) drawn
/// from `seed`.
inline AuditReport multiconvexity_audit(const NetworkSpec& net, const Dataset& d, const IndexCover& cover,
                                        std::size_t samples, std::size_t trials = 200, double eps = 1e-8,
                                        std::uint64_t seed = 1, double param_scale = 1.0) {
    const NetworkObjective obj(net, d);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, param_scale);
    std::vector<Vec> bases;
    for (std::size_t s = 0; s < samples; ++s) {
        Vec p(static_cast<Eigen::Index>(net.param_count()));
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            p[i] = normal(rng);
        }
        bases.push_back(std::move(p));
    }
    return multiconvexity_audit(obj, cover, bases, trials, eps, rng);
}

enum class PartialMinStatus { partial_minimum, not_partial_minimum, inconclusive };

inline std::string to_string(PartialMinStatus s) {
    switch (s) {
    case PartialMinStatus::partial_minimum:
        return "partial_minimum";
    case PartialMinStatus::not_partial_minimum:
        return "not_partial_minimum";
    default:
        return "inconclusive";
    }
}

struct PartialMinResult {
    PartialMinStatus status = PartialMinStatus::inconclusive;
    double base_objective = 0.0;
    std::vector<double> improvement; // per index set: g(p) - min over the section
    std::vector<Vec> minimizers;

    [[nodiscard]] bool is_partial_minimum() const { return status == PartialMinStatus::partial_minimum; }
};

struct PartialMinOptions {
    double tol = 1e-6;
    double lambda = 0.0; // regularized objective g = f + lambda |x|
    NormKind norm = NormKind::l2;
    SubproblemOptions solver{};
};

/// Solves the convex problem on each cross-section of the piece holding `p`
/// and reports whether any of them improves g(p) by `tol` or more.
inline PartialMinResult partial_min_check(const PiecewiseObjective& obj, const Vec& p, const IndexCover& cover,
                                          const PartialMinOptions& opt = {}) {
    PartialMinResult res;
    auto g = [&](const Vec& x) { return obj.value(x) + opt.lambda * norm_of(x, opt.norm); };
    res.base_objective = g(p);
    bool unsure = false;
    bool improved = false;
    for (const auto& idx : cover.sets) {
        try {
            const auto r = obj.restrict_to_piece(p, idx);
            const auto sol = prox_subproblem_solve(r, opt.lambda, opt.norm, opt.solver);
            const double gain = res.base_objective - g(sol.point);
            res.improvement.push_back(gain);
            res.minimizers.push_back(sol.point);
            improved = improved || gain >= opt.tol;
            unsure = unsure || !sol.converged;
        } catch (const RefusalError&) {
            res.improvement.push_back(std::numeric_limits<double>::quiet_NaN());
            res.minimizers.push_back(p);
            unsure = true;
        }
    }
    if (improved) {
        res.status = PartialMinStatus::not_partial_minimum;
    } else {
        res.status = unsure ? PartialMinStatus::inconclusive : PartialMinStatus::partial_minimum;
    }
    return res;
}

/// Stationary points of a piecewise multi-convex function are partial minima
/// of every piece containing them: when |grad g(p)| <= grad_tol the partial
/// minimum check must succeed. Refuses points within `margin` of a boundary.
inline AuditReport stationary_point_audit(const PiecewiseObjective& obj, const Vec& p, const IndexCover& cover,
                                          double grad_tol, const PartialMinOptions& pm = {},
                                          double margin = 1e-6) {
    const double bd = obj.boundary_distance(p);
    if (!(bd > margin)) {
        throw RefusalError("point lies within " + format_number(margin) + " of a piece boundary");
    }
    AuditReport rep;
    rep.check = "stationary_point";
    rep.checks_run = 1;
    Vec gvec = obj.gradient(p);
    if (pm.lambda > 0.0 && p.norm() > 0.0) {
        gvec += pm.lambda * (pm.norm == NormKind::l2 ? Vec(p / p.norm()) : Vec(p.array().sign().matrix()));
    }
    const double gnorm = gvec.norm();
    rep.metrics["grad_norm"] = gnorm;
    rep.metrics["boundary_distance"] = bd;
    rep.metrics["premise"] = gnorm <= grad_tol ? 1.0 : 0.0;
    if (gnorm > grad_tol) {
        rep.worst_slack = 0.0;
        return rep; // premise false: nothing to verify
    }
    const auto res = partial_min_check(obj, p, cover, pm);
    rep.metrics["partial_minimum"] = res.is_partial_minimum() ? 1.0 : 0.0;
    double worst = 0.0;
    for (double v : res.improvement) {
        if (std::isfinite(v)) {
            worst = std::max(worst, v);
        }
    }
    rep.worst_slack = worst;
    if (res.status == PartialMinStatus::not_partial_minimum) {
        rep.violations.push_back({"stationary point " + format_point(p) + " is not a partial minimum", worst});
    } else if (res.status == PartialMinStatus::inconclusive) {
        rep.inconclusive = true;
    }
    return rep;
}

struct RingTestResult {
    bool strict_local_minimum = false;
    double min_gap = std::numeric_limits<double>::infinity(); // min over ring of f(x) - f(x0)
    Vec argmin;
};

/// Probes the sphere of `radius` around x0 (random points plus the
/// coordinate directions). Strict local minimum iff every probe exceeds
/// f(x0) by more than `strict_slack`.
template <class Evaluator>
RingTestResult ring_test(const Evaluator& f, const Vec& x0, std::mt19937_64& rng, double radius = 1e-3,
                         std::size_t samples = 2000, double strict_slack = 1e-10) {
    RingTestResult out;
    const double f0 = f(x0);
    auto probe = [&](const Vec& x) {
        const double gap = f(x) - f0;
        if (gap < out.min_gap) {
            out.min_gap = gap;
            out.argmin = x;
        }
    };
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
        probe(x0 + radius * Vec::Unit(x0.size(), i));
        probe(x0 - radius * Vec::Unit(x0.size(), i));
    }
    for (std::size_t s = 0; s < samples; ++s) {
        probe(sphere_point(x0, radius, rng));
    }
    out.strict_local_minimum = out.min_gap > strict_slack;
    return out;
}

} // namespace pwmc
