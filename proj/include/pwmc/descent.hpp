#pragma once

#include "pwmc/problem.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

namespace pwmc {

/// Step sizes with a divergent sum: harmonic c/(k+1) or constant c.
/// A constant schedule is allowed but may not converge on nonsmooth pieces
/// (|x| oscillates forever).
struct StepSchedule {
    enum class Kind { harmonic, constant } kind = Kind::harmonic;
    double c = 0.1;

    static StepSchedule harmonic(double c) { return {Kind::harmonic, c}; }
    static StepSchedule constant(double c) { return {Kind::constant, c}; }

    [[nodiscard]] double at(std::size_t k) const {
        return kind == Kind::harmonic ? c / static_cast<double>(k + 1) : c;
    }
    [[nodiscard]] bool may_not_converge() const { return kind == Kind::constant; }

    /// Parses "harmonic:c" or "const:c".
    static StepSchedule parse(const std::string& s) {
        const auto colon = s.find(':');
        if (colon == std::string::npos) {
            throw InputError("schedule must look like harmonic:c or const:c, got '" + s + "'");
        }
        const std::string kind = s.substr(0, colon);
        double c = 0.0;
        try {
            c = std::stod(s.substr(colon + 1));
        } catch (const std::exception&) {
            throw InputError("schedule constant is not a number in '" + s + "'");
        }
        if (!(c > 0.0)) {
            throw InputError("schedule constant must be positive");
        }
        if (kind == "harmonic") {
            return harmonic(c);
        }
        if (kind == "const" || kind == "constant") {
            return constant(c);
        }
        throw InputError("unknown schedule kind '" + kind + "'");
    }

    [[nodiscard]] std::string to_string() const {
        std::ostringstream out;
        out << (kind == Kind::harmonic ? "harmonic:" : "const:") << c;
        return out.str();
    }
};

enum class Termination { converged, max_iters, nondifferentiable_halt, diverged };

inline std::string to_string(Termination t) {
    switch (t) {
    case Termination::converged:
        return "converged";
    case Termination::max_iters:
        return "max_iters";
    case Termination::nondifferentiable_halt:
        return "nondifferentiable_halt";
    default:
        return "diverged";
    }
}

struct TraceRecord {
    std::size_t iter = 0;
    double objective = 0.0;
    double step_size = 0.0;
    double norm_x = 0.0;
    double boundary_distance = 0.0;
    Vec x;
    bool pattern_changed = false;
    bool norm_bound_ok = true;
};

/// Iterate log of an optimizer run (every `stride`-th iterate plus the last).
struct Trace {
    std::vector<TraceRecord> records;
    Termination termination = Termination::max_iters;
    std::size_t iterations = 0;
    std::size_t pattern_changes = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] std::vector<double> objectives() const {
        std::vector<double> out;
        out.reserve(records.size());
        for (const auto& r : records) {
            out.push_back(r.objective);
        }
        return out;
    }
    [[nodiscard]] const Vec& final_point() const { return records.back().x; }
    [[nodiscard]] double final_objective() const { return records.back().objective; }
};

struct GDStop {
    double grad_tol = 1e-6;
    std::size_t max_iters = 100000;
    std::size_t stride = 1;
};

/// x_{k+1} = x_k - alpha_k grad f(x_k).
///
/// Halts with `nondifferentiable_halt` when the iterate lies exactly on a
/// piece boundary (boundary distance 0), `converged` when |grad| <= grad_tol,
/// `diverged` on a non-finite value or gradient. Between boundaries the
/// gradient is the one of the closed piece chosen by the tie convention, so
/// steps may cross pieces.
inline Trace gradient_descent(const PiecewiseObjective& f, const Vec& x0, const StepSchedule& schedule,
                              const GDStop& stop = {}) {
    if (!x0.allFinite()) {
        throw InputError("gradient descent start point is not finite");
    }
    Trace trace;
    if (schedule.may_not_converge()) {
        trace.warnings.push_back("constant step size: convergence is not guaranteed on nonsmooth pieces");
    }
    const std::size_t stride = std::max<std::size_t>(stop.stride, 1);
    Vec x = x0;
    std::string label = f.piece_label(x);
    for (std::size_t k = 0;; ++k) {
        trace.iterations = k;
        TraceRecord rec;
        rec.iter = k;
        rec.objective = f.value(x);
        rec.norm_x = x.norm();
        rec.boundary_distance = f.boundary_distance(x);
        rec.step_size = schedule.at(k);
        rec.x = x;
        const std::string now = f.piece_label(x);
        rec.pattern_changed = now != label;
        if (rec.pattern_changed) {
            ++trace.pattern_changes;
            label = now;
        }

        Termination done = Termination::max_iters;
        bool stopping = false;
        Vec g;
        if (!std::isfinite(rec.objective)) {
            done = Termination::diverged;
            stopping = true;
        } else if (rec.boundary_distance == 0.0) {
            done = Termination::nondifferentiable_halt;
            stopping = true;
        } else {
            g = f.gradient(x);
            if (!g.allFinite()) {
                done = Termination::diverged;
                stopping = true;
            } else if (g.norm() <= stop.grad_tol) {
                done = Termination::converged;
                stopping = true;
            } else if (k >= stop.max_iters) {
                done = Termination::max_iters;
                stopping = true;
            }
        }
        if (stopping || k % stride == 0) {
            trace.records.push_back(std::move(rec));
        }
        if (stopping) {
            trace.termination = done;
            break;
        }
        x -= schedule.at(k) * g;
    }
    return trace;
}

} // namespace pwmc
