#pragma once

#include "pwmc/descent.hpp"
#include "pwmc/problem.hpp"
#include "pwmc/prox.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace pwmc {

enum class ICOMode { jacobi_best, gauss_seidel };

inline std::string to_string(ICOMode m) { return m == ICOMode::jacobi_best ? "jacobi" : "seidel"; }

inline ICOMode ico_mode_from_string(const std::string& s) {
    if (s == "jacobi" || s == "jacobi_best") {
        return ICOMode::jacobi_best;
    }
    if (s == "seidel" || s == "gauss_seidel") {
        return ICOMode::gauss_seidel;
    }
    throw InputError("unknown ico mode '" + s + "'");
}

struct ICOConfig {
    double lambda = 0.1;
    NormKind norm = NormKind::l2;
    ICOMode mode = ICOMode::jacobi_best;
    double subproblem_tol = 1e-9;
    std::size_t max_iters = 1000;
    int solver_max_iters = 50000;

    void validate() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw InputError("lambda must be a finite nonnegative number");
        }
        if (!(subproblem_tol > 0.0)) {
            throw InputError("subproblem_tol must be positive");
        }
    }
};

/// Outcome of one subproblem within a step.
struct ICOCandidate {
    std::size_t set_index = 0;
    Vec point;
    double objective = 0.0; // regularized
    bool converged = false;
};

struct ICOStepResult {
    Vec point;
    double objective = 0.0; // regularized objective at `point`
    std::vector<ICOCandidate> candidates;
    /// Index of the winning candidate, or -1 when no candidate beat the
    /// previous point.
    int chosen = -1;
};

inline double regularized_value(const PiecewiseObjective& f, const Vec& x, double lambda, NormKind norm) {
    return f.value(x) + (lambda > 0.0 ? lambda * norm_of(x, norm) : 0.0);
}

/// One iteration of iterated convex optimization.
///
/// jacobi_best: every index set is solved from p_prev over its cross-section
/// of the piece holding p_prev; the best regularized objective wins, ties go
/// to the lowest position. p_prev stays feasible for every subproblem, so it
/// is kept when nothing improves on it.
/// gauss_seidel: the sets are solved in order, each from the latest point.
inline ICOStepResult ico_step(const PiecewiseObjective& f, const Vec& p_prev, const IndexCover& cover,
                              const ICOConfig& cfg) {
    cfg.validate();
    if (!p_prev.allFinite()) {
        throw InputError("ico step start point is not finite");
    }
    if (cover.sets.empty()) {
        throw InputError("index cover is empty");
    }
    const SubproblemOptions sopt{cfg.subproblem_tol, cfg.solver_max_iters};
    ICOStepResult out;
    out.point = p_prev;
    out.objective = regularized_value(f, p_prev, cfg.lambda, cfg.norm);

    std::size_t failures = 0;
    for (std::size_t s = 0; s < cover.sets.size(); ++s) {
        const Vec& from = cfg.mode == ICOMode::jacobi_best ? p_prev : out.point;
        const auto r = f.restrict_to_piece(from, cover.sets[s]);
        const auto sol = prox_subproblem_solve(r, cfg.lambda, cfg.norm, sopt);
        ICOCandidate cand{s, sol.point, regularized_value(f, sol.point, cfg.lambda, cfg.norm), sol.converged};
        if (!sol.converged) {
            ++failures;
        }
        if (cand.objective < out.objective) {
            out.point = cand.point;
            out.objective = cand.objective;
            out.chosen = static_cast<int>(s);
        }
        out.candidates.push_back(std::move(cand));
    }
    if (failures == cover.sets.size()) {
        throw ConvergenceError("no ico subproblem reached tolerance " + format_number(cfg.subproblem_tol));
    }
    return out;
}

/// Repeats ico_step until the objective decrease stays below subproblem_tol
/// for 3 consecutive iterations, or max_iters. Records the regularized
/// objective and, for lambda > 0, the bound |x_k| <= (g(x0) - inf f)/lambda.
inline Trace ico_run(const PiecewiseObjective& f, const Vec& p0, const IndexCover& cover, const ICOConfig& cfg) {
    cfg.validate();
    if (!p0.allFinite()) {
        throw InputError("ico start point is not finite");
    }
    Trace trace;
    if (cfg.lambda == 0.0) {
        trace.warnings.push_back("lambda = 0: iterates are not guaranteed to stay bounded");
    }
    const double g0 = regularized_value(f, p0, cfg.lambda, cfg.norm);
    const double radius = cfg.lambda > 0.0 ? (g0 - f.lower_bound()) / cfg.lambda
                                           : std::numeric_limits<double>::infinity();
    auto record = [&](std::size_t k, const Vec& x, double g, bool changed) {
        TraceRecord rec;
        rec.iter = k;
        rec.objective = g;
        rec.step_size = cfg.lambda;
        rec.norm_x = norm_of(x, cfg.norm);
        rec.boundary_distance = f.boundary_distance(x);
        rec.x = x;
        rec.pattern_changed = changed;
        rec.norm_bound_ok = rec.norm_x <= radius * (1.0 + 1e-12) + 1e-12;
        trace.records.push_back(std::move(rec));
    };

    Vec x = p0;
    double g = g0;
    std::string label = f.piece_label(x);
    record(0, x, g, false);
    std::size_t quiet = 0;
    trace.termination = Termination::max_iters;
    for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
        const auto step = ico_step(f, x, cover, cfg);
        if (!std::isfinite(step.objective)) {
            trace.termination = Termination::diverged;
            break;
        }
        const double decrease = g - step.objective;
        x = step.point;
        g = step.objective;
        const std::string now = f.piece_label(x);
        const bool changed = now != label;
        if (changed) {
            ++trace.pattern_changes;
            label = now;
        }
        record(k, x, g, changed);
        trace.iterations = k;
        quiet = decrease < cfg.subproblem_tol ? quiet + 1 : 0;
        if (quiet >= 3) {
            trace.termination = Termination::converged;
            break;
        }
    }
    return trace;
}

struct LimitAuditReport {
    bool passed = false;
    std::size_t clusters = 0;
    std::vector<double> cluster_objectives;
    double spread = 0.0; // max - min of cluster mean objectives
};

/// Clusters the last `window` iterates greedily (a point joins the first
/// cluster whose seed is within `cluster_radius`) and checks that all
/// cluster mean objectives agree within `objective_tol`.
inline LimitAuditReport subsequence_limit_audit(const Trace& trace, std::size_t window, double cluster_radius,
                                                double objective_tol = 1e-8) {
    if (window == 0 || trace.records.size() <= window) {
        throw InputError("trace must be longer than the audit window");
    }
    struct Cluster {
        Vec seed;
        double sum = 0.0;
        std::size_t count = 0;
    };
    std::vector<Cluster> clusters;
    for (std::size_t i = trace.records.size() - window; i < trace.records.size(); ++i) {
        const auto& rec = trace.records[i];
        bool placed = false;
        for (auto& c : clusters) {
            if ((rec.x - c.seed).norm() <= cluster_radius) {
                c.sum += rec.objective;
                ++c.count;
                placed = true;
                break;
            }
        }
        if (!placed) {
            clusters.push_back({rec.x, rec.objective, 1});
        }
    }
    LimitAuditReport rep;
    rep.clusters = clusters.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& c : clusters) {
        const double mean = c.sum / static_cast<double>(c.count);
        rep.cluster_objectives.push_back(mean);
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
    }
    rep.spread = hi - lo;
    rep.passed = rep.spread <= objective_tol;
    return rep;
}

} // namespace pwmc
