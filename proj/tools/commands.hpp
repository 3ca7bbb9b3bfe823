#pragma once

// Command implementations behind the `pwmc` executable. Each returns a
// process exit code and writes its artifacts to the given paths.

#include "pwmc/pwmc.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace pwmc::cli {

enum Exit : int { ok = 0, audit_failed = 1, input_error = 2, not_converged = 3 };

using io::json;

// ---------------------------------------------------------------- surface

struct SurfaceOptions {
    int resolution = 51;
    std::string out;
};

/// Grid of the two-layer surface over the unit square with the input-space
/// piece index of every grid point (-1 if no full-dimensional piece matches).
inline int run_surface(const SurfaceOptions& opt, std::ostream& log) {
    if (opt.resolution < 2) {
        throw InputError("--res must be at least 2");
    }
    const auto net = fixtures::surface_network();
    const Vec p = fixtures::surface_params();
    const Vec target = fixtures::surface_target();
    const auto pieces = enumerate_pieces(net, p, Dataset{}, PieceSpace::input());
    std::ostringstream out;
    out << "x,y,f,piece_id\n";
    for (int i = 0; i < opt.resolution; ++i) {
        for (int j = 0; j < opt.resolution; ++j) {
            const double x = static_cast<double>(i) / (opt.resolution - 1);
            const double y = static_cast<double>(j) / (opt.resolution - 1);
            const Vec z = fixtures::vec({x, y});
            const auto pat = pattern_at_input(net, p, z);
            int id = -1;
            for (std::size_t k = 0; k < pieces.size(); ++k) {
                if (pieces[k].pattern == pat) {
                    id = static_cast<int>(k);
                    break;
                }
            }
            out << io::num(x) << ',' << io::num(y) << ',' << io::num(point_loss(net, p, z, target)) << ',' << id
                << '\n';
        }
    }
    io::write_file(opt.out, out.str());
    log << "wrote " << opt.resolution * opt.resolution << " grid points, " << pieces.size()
        << " input pieces, to " << opt.out << '\n';
    return ok;
}

// ---------------------------------------------------------------- badmin

struct BadMinOptions {
    double alpha = 2.0;
    bool unit_variance = false;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    std::string schedule = "const:0.5";
    std::size_t random_starts = 20;
    std::size_t max_iters = 100000;
};

struct MinimumReport {
    std::string name;
    Vec point;
    double closed_form = 0.0; // summed objective
    double evaluated = 0.0;   // M * mean loss
    bool strict_local = false;
    double ring_gap = 0.0;
    std::size_t starts = 0;
    std::size_t reached = 0;
    double worst_distance = 0.0;
};

/// Single ReLU neuron on D(alpha): checks the two local minima in closed
/// form, ring-tests them, runs gradient descent from nearby and random
/// starts, and enumerates the parameter-space pieces.
///
/// Objective conventions: the library's loss is the mean over the M points;
/// every "summed" number below is M times it.
inline int run_badmin(const BadMinOptions& opt, std::ostream& log) {
    if (!(opt.alpha > 1.0)) {
        throw InputError("--alpha must be greater than 1");
    }
    const double a = opt.alpha;
    const auto net = fixtures::single_neuron();
    const auto data = fixtures::bad_minima_data(a, opt.unit_variance);
    const double M = static_cast<double>(data.size());
    const double extra = opt.unit_variance ? std::floor(a) : 0.0;
    const NetworkObjective obj(net, data);
    const auto schedule = StepSchedule::parse(opt.schedule);
    std::filesystem::create_directories(opt.out_dir);
    std::mt19937_64 rng(opt.seed);

    std::vector<MinimumReport> minima(2);
    minima[0].name = "high";
    minima[0].point = fixtures::bad_minimum_high(a);
    minima[0].closed_form = 4.0 * a * a * (1.0 + extra); // dead points (1, 2 alpha)
    minima[1].name = "low";
    minima[1].point = fixtures::bad_minimum_low(a);
    minima[1].closed_form = a * a; // dead point (-1, alpha)

    bool all_ok = true;
    json report;
    report["alpha"] = a;
    report["unit_variance"] = opt.unit_variance;
    report["points"] = data.size();
    report["convention"] = "summed = M * mean; library loss is the mean";
    report["schedule"] = schedule.to_string();
    report["seed"] = opt.seed;

    const std::vector<Vec> offsets = {
        fixtures::vec({0.09, 0.0}),  fixtures::vec({-0.09, 0.0}), fixtures::vec({0.0, 0.09}),
        fixtures::vec({0.0, -0.09}), fixtures::vec({0.06, 0.06}), fixtures::vec({-0.06, -0.06}),
        fixtures::vec({0.06, -0.06}), fixtures::vec({-0.06, 0.06})};
    GDStop stop{1e-6, opt.max_iters, 1};

    json mins = json::array();
    for (auto& m : minima) {
        m.evaluated = M * obj.value(m.point);
        const double err = std::abs(m.evaluated - m.closed_form);
        const auto ring = ring_test([&](const Vec& q) { return obj.value(q); }, m.point, rng);
        m.strict_local = ring.strict_local_minimum;
        m.ring_gap = ring.min_gap;
        for (std::size_t s = 0; s < offsets.size(); ++s) {
            const auto t = gradient_descent(obj, m.point + offsets[s], schedule, stop);
            const double dist = (t.final_point() - m.point).norm();
            ++m.starts;
            m.worst_distance = std::max(m.worst_distance, dist);
            if (t.termination == Termination::converged && dist <= 1e-4) {
                ++m.reached;
            }
            if (s == 0) {
                io::write_file(opt.out_dir + "/trace_" + m.name + ".csv", io::trace_to_csv(t, true));
            }
        }
        const bool ok_here = err <= 1e-9 && m.strict_local && m.reached == m.starts;
        all_ok = all_ok && ok_here;
        mins.push_back({{"name", m.name},
                        {"a", m.point[0]},
                        {"b", m.point[1]},
                        {"summed_closed_form", m.closed_form},
                        {"summed_evaluated", m.evaluated},
                        {"mean_evaluated", obj.value(m.point)},
                        {"abs_error", err},
                        {"strict_local_minimum", m.strict_local},
                        {"ring_min_gap", m.ring_gap},
                        {"gd_starts", m.starts},
                        {"gd_reached", m.reached},
                        {"gd_worst_distance", m.worst_distance}});
    }
    report["minima"] = mins;

    // basins of random starts
    std::normal_distribution<double> normal(0.0, 2.0 * a);
    std::map<std::string, std::size_t> basins;
    json starts = json::array();
    for (std::size_t s = 0; s < opt.random_starts; ++s) {
        const Vec x0 = fixtures::vec({normal(rng), normal(rng)});
        const auto t = gradient_descent(obj, x0, schedule, stop);
        // endpoints away from both minima are labelled by their activation pattern
        std::string basin = "pattern " + pattern_at(net, t.final_point(), data).to_string();
        if ((t.final_point() - minima[0].point).norm() <= 1e-3) {
            basin = "high";
        } else if ((t.final_point() - minima[1].point).norm() <= 1e-3) {
            basin = "low";
        }
        ++basins[basin];
        starts.push_back({{"start", io::vec_to_json(x0)},
                          {"end", io::vec_to_json(t.final_point())},
                          {"termination", to_string(t.termination)},
                          {"summed_objective", M * t.final_objective()},
                          {"basin", basin}});
    }
    report["random_starts"] = starts;
    report["basin_counts"] = basins;

    const double separation = std::abs(minima[1].point[0] - minima[0].point[0]);
    const double gap = minima[0].evaluated - minima[1].evaluated;
    const double gap_closed = minima[0].closed_form - minima[1].closed_form;
    report["separation"] = separation;
    report["separation_closed_form"] = 3.0 * a - 1.0;
    report["summed_gap"] = gap;
    report["summed_gap_closed_form"] = gap_closed;
    all_ok = all_ok && separation == 3.0 * a - 1.0 && std::abs(gap - gap_closed) <= 1e-6;

    const auto pieces = enumerate_pieces(net, minima[0].point, data, PieceSpace::of_layer(0));
    json pats = json::array();
    for (const auto& pc : pieces) {
        pats.push_back(pc.pattern.to_string());
    }
    report["pieces"] = pieces.size();
    report["piece_patterns"] = pats;
    if (!opt.unit_variance) {
        all_ok = all_ok && pieces.size() == 6;
    }
    report["pass"] = all_ok;
    io::write_file(opt.out_dir + "/badmin.json", report.dump(2) + "\n");
    log << "alpha " << a << ": minima " << io::num(minima[0].evaluated) << " and " << io::num(minima[1].evaluated)
        << " (summed), gap " << io::num(gap) << ", " << pieces.size() << " pieces, "
        << (all_ok ? "all checks pass" : "CHECK FAILED") << '\n';
    return all_ok ? ok : audit_failed;
}

// ---------------------------------------------------------------- shared loading

struct ProblemFiles {
    std::string net;
    std::string data;
    std::string params;
    std::string fixture; // analytic objective instead of net + data
    std::string x0;      // comma list start for fixtures
    std::uint64_t seed = 1;
};

struct LoadedProblem {
    std::unique_ptr<PiecewiseObjective> objective;
    std::optional<NetworkSpec> net;
    IndexCover layer_cover;
    Vec start;
};

inline std::unique_ptr<PiecewiseObjective> make_fixture(const std::string& name) {
    if (name == "abs") {
        return std::make_unique<FunctionObjective>(fixtures::abs_value());
    }
    if (name == "square") {
        return std::make_unique<FunctionObjective>(fixtures::square());
    }
    if (name == "min_x4") {
        return std::make_unique<FunctionObjective>(fixtures::min_x_x4());
    }
    if (name == "xy") {
        return std::make_unique<FunctionObjective>(fixtures::product_xy());
    }
    if (name == "autoencoder") {
        return std::make_unique<FunctionObjective>(fixtures::scalar_autoencoder());
    }
    throw InputError("unknown fixture '" + name + "' (abs, square, min_x4, xy, autoencoder)");
}

inline LoadedProblem load_problem(const ProblemFiles& f) {
    LoadedProblem out;
    if (!f.fixture.empty()) {
        if (!f.net.empty() || !f.data.empty()) {
            throw InputError("--fixture cannot be combined with --net/--data");
        }
        out.objective = make_fixture(f.fixture);
        const auto n = out.objective->dim();
        out.layer_cover = IndexCover::singletons(n);
        if (!f.x0.empty()) {
            out.start = io::params_from_csv(f.x0);
        } else if (!f.params.empty()) {
            out.start = io::params_from_csv(io::read_file(f.params));
        } else {
            out.start = Vec::Zero(static_cast<Eigen::Index>(n));
        }
        if (static_cast<std::size_t>(out.start.size()) != n) {
            throw InputError("start point has " + std::to_string(out.start.size()) + " values, fixture needs " +
                             std::to_string(n));
        }
        return out;
    }
    if (f.net.empty() || f.data.empty()) {
        throw InputError("--net and --data are required (or --fixture)");
    }
    auto net = io::load_network(f.net);
    auto data = io::load_dataset(f.data, net);
    if (!f.params.empty()) {
        out.start = io::params_from_csv(io::read_file(f.params));
        check_params(net, out.start);
    } else {
        std::mt19937_64 rng(f.seed);
        out.start = fixtures::random_params(net, rng);
    }
    out.layer_cover = net.layer_cover();
    out.net = net;
    out.objective = std::make_unique<NetworkObjective>(std::move(net), std::move(data));
    return out;
}

inline IndexCover parse_cover(const std::string& name, const LoadedProblem& prob) {
    const auto n = prob.objective->dim();
    if (name == "layers") {
        return prob.layer_cover;
    }
    if (name == "joint") {
        return IndexCover::joint(n);
    }
    if (name == "singletons") {
        return IndexCover::singletons(n);
    }
    throw InputError("unknown cover '" + name + "' (layers, joint, singletons)");
}

// ---------------------------------------------------------------- train

struct TrainOptions {
    ProblemFiles files;
    std::string algo = "gd";
    double lambda = 0.1;
    std::string norm = "l2";
    std::string mode = "jacobi";
    std::string schedule = "harmonic:0.1";
    std::string cover = "layers";
    double grad_tol = 1e-6;
    std::size_t max_iters = 0; // 0: algorithm default
    std::size_t stride = 1;
    bool with_params = false;
    std::string out_trace = "trace.csv";
    std::string out_summary = "summary.json";
};

inline int run_train(const TrainOptions& opt, std::ostream& log) {
    const auto prob = load_problem(opt.files);
    const auto cover = parse_cover(opt.cover, prob);
    if (!cover.covers(prob.objective->dim())) {
        throw InputError("index cover does not cover every parameter");
    }
    json summary;
    summary["algo"] = opt.algo;
    Trace trace;
    PartialMinOptions pm;
    if (opt.algo == "gd") {
        const auto schedule = StepSchedule::parse(opt.schedule);
        GDStop stop{opt.grad_tol, opt.max_iters ? opt.max_iters : 100000, opt.stride};
        trace = gradient_descent(*prob.objective, prob.start, schedule, stop);
        summary["schedule"] = schedule.to_string();
    } else if (opt.algo == "ico") {
        ICOConfig cfg;
        cfg.lambda = opt.lambda;
        cfg.norm = norm_from_string(opt.norm);
        cfg.mode = ico_mode_from_string(opt.mode);
        if (opt.max_iters) {
            cfg.max_iters = opt.max_iters;
        }
        trace = ico_run(*prob.objective, prob.start, cover, cfg);
        pm.lambda = cfg.lambda;
        pm.norm = cfg.norm;
        summary["lambda"] = cfg.lambda;
        summary["norm"] = to_string(cfg.norm);
        summary["mode"] = to_string(cfg.mode);
        bool bound_ok = true;
        bool monotone = true;
        for (std::size_t k = 0; k < trace.records.size(); ++k) {
            bound_ok = bound_ok && trace.records[k].norm_bound_ok;
            if (k > 0) {
                monotone = monotone && trace.records[k].objective <= trace.records[k - 1].objective + 1e-10;
            }
        }
        summary["norm_bound_ok"] = bound_ok;
        summary["monotone"] = monotone;
    } else {
        throw InputError("--algo must be gd or ico");
    }
    io::write_file(opt.out_trace, io::trace_to_csv(trace, opt.with_params));

    summary["termination"] = to_string(trace.termination);
    summary["iterations"] = trace.iterations;
    summary["final_objective"] = trace.final_objective();
    summary["final_params"] = io::vec_to_json(trace.final_point());
    summary["pattern_changes"] = trace.pattern_changes;
    summary["warnings"] = trace.warnings;

    int code = trace.termination == Termination::converged ? ok : not_converged;
    const auto pmr = partial_min_check(*prob.objective, trace.final_point(), cover, pm);
    summary["partial_min_check"] = to_string(pmr.status);
    if (trace.termination == Termination::converged && pmr.status == PartialMinStatus::not_partial_minimum &&
        opt.algo == "ico") {
        code = audit_failed;
    }
    if (opt.algo == "gd" && trace.termination == Termination::converged &&
        prob.objective->boundary_distance(trace.final_point()) > 1e-6) {
        const auto rep = stationary_point_audit(*prob.objective, trace.final_point(), cover, opt.grad_tol);
        summary["stationary_point_audit"] = io::report_to_json(rep);
        if (!rep.passed()) {
            code = audit_failed;
        }
    }
    io::write_file(opt.out_summary, summary.dump(2) + "\n");
    log << opt.algo << ": " << to_string(trace.termination) << " after " << trace.iterations
        << " iterations, objective " << io::num(trace.final_objective()) << '\n';
    for (const auto& w : trace.warnings) {
        log << "warning: " << w << '\n';
    }
    return code;
}

// ---------------------------------------------------------------- certify

struct CertifyOptions {
    ProblemFiles files;
    std::string check = "multiconvexity"; // multiconvexity | input-pieces | stationary
    std::string cover = "layers";
    std::size_t samples = 5;
    std::size_t trials = 200;
    double eps = 1e-8;
    double grad_tol = 1e-6;
    double box_radius = 1.0;
    std::string out = "audit.json";
};

inline int run_certify(const CertifyOptions& opt, std::ostream& log) {
    const auto prob = load_problem(opt.files);
    AuditReport rep;
    if (opt.check == "multiconvexity") {
        const auto cover = parse_cover(opt.cover, prob);
        std::mt19937_64 rng(opt.files.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<Vec> bases;
        if (!opt.files.params.empty() || !opt.files.x0.empty()) {
            bases.push_back(prob.start);
        }
        while (bases.size() < opt.samples) {
            Vec b(static_cast<Eigen::Index>(prob.objective->dim()));
            for (Eigen::Index i = 0; i < b.size(); ++i) {
                b[i] = normal(rng);
            }
            bases.push_back(std::move(b));
        }
        rep = multiconvexity_audit(*prob.objective, cover, bases, opt.trials, opt.eps, rng, opt.box_radius);
    } else if (opt.check == "input-pieces") {
        if (!prob.net) {
            throw InputError("input-pieces needs --net and --data");
        }
        const auto& net = *prob.net;
        const auto& data = static_cast<const NetworkObjective&>(*prob.objective).data();
        const Vec target = data.targets.front();
        const Vec p = prob.start;
        const auto pieces = enumerate_pieces(net, p, data, PieceSpace::input());
        std::mt19937_64 rng(opt.files.seed);
        rep.check = "input_piece_convexity";
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            auto one = chord_convexity_test([&](const Vec& x) { return point_loss(net, p, x, target); },
                                            pieces[k].polytope, opt.trials, opt.eps, rng, opt.box_radius);
            for (auto& v : one.violations) {
                v.location = "piece " + pieces[k].pattern.to_string() + ": " + v.location;
            }
            rep.merge(one);
        }
        rep.metrics["pieces"] = static_cast<double>(pieces.size());
    } else if (opt.check == "stationary") {
        rep = stationary_point_audit(*prob.objective, prob.start, parse_cover(opt.cover, prob), opt.grad_tol);
    } else {
        throw InputError("--check must be multiconvexity, input-pieces or stationary");
    }
    auto j = io::report_to_json(rep);
    j["seed"] = opt.files.seed;
    io::write_file(opt.out, j.dump(2) + "\n");
    log << rep.check << ": " << to_string(rep.verdict()) << " (" << rep.checks_run << " checks, "
        << rep.violations.size() << " violations)\n";
    return rep.passed() ? ok : audit_failed;
}

// ---------------------------------------------------------------- pieces

struct PiecesOptions {
    ProblemFiles files;
    std::string space = "input";
    std::size_t cap = 20;
    std::string out = "pieces.json";
};

inline PieceSpace parse_space(const std::string& s) {
    if (s == "input") {
        return PieceSpace::input();
    }
    if (s.rfind("layer:", 0) == 0) {
        try {
            const int m = std::stoi(s.substr(6));
            if (m < 0) {
                throw InputError("negative layer");
            }
            return PieceSpace::of_layer(static_cast<std::size_t>(m));
        } catch (const std::exception&) {
            throw InputError("bad layer index in '" + s + "'");
        }
    }
    throw InputError("--space must be input or layer:m");
}

inline int run_pieces(const PiecesOptions& opt, std::ostream& log) {
    const auto prob = load_problem(opt.files);
    if (!prob.net) {
        throw InputError("pieces needs --net and --data");
    }
    const auto& data = static_cast<const NetworkObjective&>(*prob.objective).data();
    const auto pieces = enumerate_pieces(*prob.net, prob.start, data, parse_space(opt.space), opt.cap);
    io::write_file(opt.out, io::pieces_to_json(pieces).dump(2) + "\n");
    log << pieces.size() << " full-dimensional pieces in " << opt.space << " space\n";
    return ok;
}

/// Runs `body`, mapping library exceptions to exit codes.
template <class Body>
int guarded(Body&& body, std::ostream& err) {
    try {
        return body();
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const RefusalError& e) {
        err << "refused: " << e.what() << '\n';
        return input_error;
    } catch (const ConvergenceError& e) {
        err << "not converged: " << e.what() << '\n';
        return not_converged;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    }
}

} // namespace pwmc::cli
