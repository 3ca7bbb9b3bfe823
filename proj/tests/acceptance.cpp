// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace pwmc;
using fixtures::vec;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::ostringstream sink;

// 1. single-neuron local minima, through the badmin command
Outcome bad_minima() {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    const auto root = std::filesystem::temp_directory_path() / ("pwmc_acceptance_" + std::to_string(::getpid()));
    for (double alpha : {2.0, 5.0, 10.0, 50.0}) {
        cli::BadMinOptions opt;
        opt.alpha = alpha;
        opt.out_dir = (root / ("alpha" + fmt(alpha))).string();
        opt.random_starts = alpha == 2.0 ? 20 : 0;
        const int code = cli::run_badmin(opt, sink);
        const auto j = io::json::parse(io::read_file(opt.out_dir + "/badmin.json"));
        const double gap = j["summed_gap"].get<double>();
        out.require(std::abs(gap - 3.0 * alpha * alpha) <= 1e-6, "alpha " + fmt(alpha) + " gap " + fmt(gap));
        out.require(j["separation"].get<double>() == 3.0 * alpha - 1.0, "alpha " + fmt(alpha) + " separation");
        if (alpha != 2.0) {
            continue;
        }
        out.require(code == cli::ok, "badmin exit code " + std::to_string(code));
        const double want[2][3] = {{-1.5, 0.5, 16.0}, {3.5, 0.5, 4.0}};
        for (int m = 0; m < 2; ++m) {
            const auto& mj = j["minima"][m];
            out.require(mj["a"].get<double>() == want[m][0] && mj["b"].get<double>() == want[m][1],
                        "minimum location " + std::to_string(m));
            out.require(std::abs(mj["summed_evaluated"].get<double>() - want[m][2]) <= 1e-9,
                        "summed objective " + std::to_string(m));
            out.require(mj["gd_reached"] == mj["gd_starts"] && mj["gd_worst_distance"].get<double>() <= 1e-4,
                        "gd from nearby starts " + std::to_string(m));
        }
    }
    std::filesystem::remove_all(root);
    const double secs = seconds_since(t0);
    out.require(secs < 5.0, "runtime " + fmt(secs) + " s");
    out.note("runtime " + fmt(secs) + " s");
    return out;
}

// 2. piece count of the single-neuron parameter space
Outcome six_pieces() {
    Outcome out;
    const auto pieces = enumerate_pieces(fixtures::single_neuron(), fixtures::bad_minimum_high(2.0),
                                         fixtures::bad_minima_data(2.0), PieceSpace::of_layer(0));
    out.require(pieces.size() == 6, std::to_string(pieces.size()) + " pieces");
    for (const auto& pc : pieces) {
        out.require(is_full_dimensional(pc.polytope), pc.pattern.to_string() + " not full-dimensional");
    }
    out.note(std::to_string(pieces.size()) + " pieces");
    return out;
}

// 3. backprop against central differences on random nets
Outcome gradients() {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t checked = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; checked < 120 && seed < 1000; ++seed) {
        std::mt19937_64 rng(5000 + seed);
        std::uniform_int_distribution<int> layers(1, 3);
        std::uniform_int_distribution<int> width(1, 8);
        std::uniform_int_distribution<int> points(1, 16);
        const int depth = layers(rng);
        const int in_dim = width(rng);
        const int hidden = width(rng);
        const int out_dim = std::min(width(rng), 3);
        auto net = fixtures::random_network(depth, in_dim, hidden, out_dim, seed % 3 == 0);
        if (seed % 5 == 0) {
            net.objective.kind = ObjectiveKind::logistic;
            net.layers.back().out_dim = 1;
        }
        const auto npts = static_cast<std::size_t>(points(rng));
        Dataset d = fixtures::random_dataset(net, npts, rng);
        const Vec p = fixtures::random_params(net, rng);
        if (boundary_distance(net, p, d) <= 1e-4) {
            continue;
        }
        const NetworkObjective obj(net, d);
        const Vec g = obj.gradient(p);
        Vec fd(p.size());
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            Vec up = p;
            Vec dn = p;
            up[i] += h;
            dn[i] -= h;
            fd[i] = (obj.value(up) - obj.value(dn)) / (2.0 * h);
        }
        const double scale = std::max(g.norm(), fd.norm());
        const double rel = scale < 1e-12 ? (g - fd).norm() : (g - fd).norm() / scale;
        worst = std::max(worst, rel);
        ++checked;
    }
    const double secs = seconds_since(t0);
    out.require(checked >= 100, std::to_string(checked) + " instances");
    out.require(worst <= 1e-5, "worst relative error " + fmt(worst));
    out.require(secs < 30.0, "runtime " + fmt(secs) + " s");
    out.note(std::to_string(checked) + " nets, worst rel err " + fmt(worst) + ", " + fmt(secs) + " s");
    return out;
}

// 4. chord audit of the two-layer surface on each input piece
Outcome piecewise_convexity() {
    Outcome out;
    const auto net = fixtures::surface_network();
    const Vec p = fixtures::surface_params();
    const Vec y = fixtures::surface_target();
    const auto pieces = enumerate_pieces(net, p, Dataset{}, PieceSpace::input());
    std::mt19937_64 rng(2024);
    std::size_t violations = 0;
    for (const auto& pc : pieces) {
        const auto rep = chord_convexity_test([&](const Vec& x) { return point_loss(net, p, x, y); }, pc.polytope,
                                              1000, 1e-8, rng, 2.0);
        out.require(rep.checks_run == 1000, "chords run " + std::to_string(rep.checks_run));
        violations += rep.violations.size();
    }
    out.require(violations == 0, std::to_string(violations) + " violations");
    out.note(std::to_string(pieces.size()) + " pieces x 1000 chords, " + std::to_string(violations) + " violations");
    return out;
}

// 5. per-layer multi-convexity, with the joint cover as a negative control
Outcome multi_convexity() {
    Outcome out;
    std::size_t violations = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(900 + seed);
        const auto net = fixtures::random_network(3, 2, 4, 1, true);
        const auto d = fixtures::random_dataset(net, 5, rng);
        const auto rep = multiconvexity_audit(net, d, net.layer_cover(), 3, 200, 1e-8, seed);
        violations += rep.violations.size();
        out.require(rep.passed(), "seed " + std::to_string(seed) + " verdict " + to_string(rep.verdict()));
    }
    const auto chain = fixtures::linear_chain();
    const auto joint = multiconvexity_audit(chain, fixtures::bilinear_data(), IndexCover::joint(chain.param_count()),
                                            3, 300, 1e-8, 1);
    out.require(!joint.violations.empty(), "joint cover on the bilinear net found no violation");
    out.note("per-layer violations " + std::to_string(violations) + ", joint-cover violations " +
             std::to_string(joint.violations.size()));
    return out;
}

struct IcoRun {
    std::string name;
    std::unique_ptr<PiecewiseObjective> f;
    IndexCover cover;
    Trace trace;
};

std::vector<IcoRun> ico_runs() {
    std::vector<IcoRun> runs;
    ICOConfig cfg;
    cfg.lambda = 0.1;
    {
        IcoRun r{"autoencoder", std::make_unique<FunctionObjective>(fixtures::scalar_autoencoder()),
                 IndexCover::singletons(2), {}};
        r.trace = ico_run(*r.f, vec({0.1, 0.1}), r.cover, cfg);
        runs.push_back(std::move(r));
    }
    {
        const auto net = fixtures::linear_chain();
        IcoRun r{"autoencoder net", std::make_unique<NetworkObjective>(net, fixtures::autoencoder_data()),
                 net.layer_cover(), {}};
        r.trace = ico_run(*r.f, vec({0.3, 0.0, 0.2, 0.0}), r.cover, cfg);
        runs.push_back(std::move(r));
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(1300 + seed);
        const auto net = fixtures::random_network(2, 2, 3, 1);
        const auto d = fixtures::random_dataset(net, 6, rng);
        IcoRun r{"relu seed " + std::to_string(seed), std::make_unique<NetworkObjective>(net, d), net.layer_cover(),
                 {}};
        ICOConfig c = cfg;
        c.mode = seed % 2 == 0 ? ICOMode::jacobi_best : ICOMode::gauss_seidel;
        r.trace = ico_run(*r.f, fixtures::random_params(net, rng), r.cover, c);
        runs.push_back(std::move(r));
    }
    return runs;
}

// 6. monotone descent and the norm bound on every run
Outcome ico_descent(const std::vector<IcoRun>& runs) {
    Outcome out;
    const double lambda = 0.1;
    std::size_t iterates = 0;
    for (const auto& r : runs) {
        const auto& rec = r.trace.records;
        const double g0 = regularized_value(*r.f, rec.front().x, lambda, NormKind::l2);
        const double bound = (g0 - r.f->lower_bound()) / lambda;
        for (std::size_t k = 0; k < rec.size(); ++k) {
            const double gk = regularized_value(*r.f, rec[k].x, lambda, NormKind::l2);
            if (k > 0) {
                const double gprev = regularized_value(*r.f, rec[k - 1].x, lambda, NormKind::l2);
                out.require(gk <= gprev + 1e-10, r.name + " increase at " + std::to_string(k));
            }
            out.require(rec[k].x.norm() <= bound, r.name + " norm bound at " + std::to_string(k));
            ++iterates;
        }
    }
    out.note(std::to_string(runs.size()) + " runs, " + std::to_string(iterates) + " iterates");
    return out;
}

// 7. quality of the ICO limit points
Outcome ico_limits(const std::vector<IcoRun>& runs) {
    Outcome out;
    PartialMinOptions pm;
    pm.tol = 1e-6;
    pm.lambda = 0.1;
    std::size_t audited = 0;
    for (const auto& r : runs) {
        const auto res = partial_min_check(*r.f, r.trace.final_point(), r.cover, pm);
        out.require(res.is_partial_minimum(), r.name + " " + to_string(res.status));
        // the audit looks at the tail only: at most 20 records, never the first half
        const std::size_t n = r.trace.records.size();
        if (n < 4) {
            out.require(false, r.name + " trace too short for the limit audit");
            continue;
        }
        const auto lim = subsequence_limit_audit(r.trace, std::min<std::size_t>(20, n / 2), 1e-3, 1e-8);
        out.require(lim.passed, r.name + " cluster spread " + fmt(lim.spread));
        ++audited;
    }
    out.note(std::to_string(audited) + " runs audited");
    return out;
}

// 8. gradient descent endpoints and the one-dimensional fixtures
Outcome gd_necessary_condition() {
    Outcome out;
    std::size_t audited = 0;
    auto audit_endpoint = [&](const PiecewiseObjective& f, const Trace& t, const IndexCover& cover,
                              const std::string& name) {
        if (t.termination != Termination::converged || !(f.boundary_distance(t.final_point()) > 1e-6)) {
            return;
        }
        const auto rep = stationary_point_audit(f, t.final_point(), cover, 1e-6);
        out.require(rep.passed(), name + " stationary audit " + to_string(rep.verdict()));
        ++audited;
    };
    const GDStop stop{1e-6, 100000, 1};
    {
        const auto net = fixtures::single_neuron();
        const NetworkObjective obj(net, fixtures::bad_minima_data(2.0));
        const auto sched = StepSchedule::parse("const:0.5");
        for (const Vec& x0 : {vec({0.0, 1.0}), vec({-1.45, 0.55}), vec({3.45, 0.45}), vec({1.0, -0.2})}) {
            audit_endpoint(obj, gradient_descent(obj, x0, sched, stop), net.layer_cover(), "neuron");
        }
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(1700 + seed);
        const auto net = fixtures::random_network(2, 2, 3, 1);
        const NetworkObjective obj(net, fixtures::random_dataset(net, 6, rng));
        const auto t = gradient_descent(obj, fixtures::random_params(net, rng), StepSchedule::parse("const:0.05"), stop);
        audit_endpoint(obj, t, net.layer_cover(), "relu seed " + std::to_string(seed));
    }
    out.require(audited >= 3, "only " + std::to_string(audited) + " endpoints audited");

    // min(x, x^4) from 0.5 with the fixture's harmonic schedule, c = 0.1
    const auto mx = fixtures::min_x_x4();
    const auto harmonic = gradient_descent(mx, vec({0.5}), StepSchedule::parse("harmonic:0.1"), stop);
    bool inside = true;
    for (const auto& r : harmonic.records) {
        inside = inside && r.x[0] >= 0.0 && r.x[0] <= 1.0;
    }
    const double xf = harmonic.final_point()[0];
    out.require(inside, "min(x,x^4) left [0,1]");
    out.require(std::abs(xf) <= 0.1, "min(x,x^4) harmonic:0.1 ends at |x| = " + fmt(std::abs(xf)) + " after " +
                                          std::to_string(harmonic.iterations) + " steps (" +
                                          to_string(harmonic.termination) + ")");
    const auto constant = gradient_descent(mx, vec({0.5}), StepSchedule::parse("const:0.5"), stop);
    out.note("const:0.5 ends at |x| = " + fmt(std::abs(constant.final_point()[0])));

    const auto ab = gradient_descent(fixtures::abs_value(), vec({0.05}), StepSchedule::parse("const:0.3"), stop);
    out.require(ab.termination == Termination::max_iters, "|x| terminated " + to_string(ab.termination));
    out.note(std::to_string(audited) + " endpoints audited");
    return out;
}

// 9. a partial minimum that is not a local minimum
Outcome partial_not_local() {
    Outcome out;
    const auto f = fixtures::product_xy();
    const auto res = partial_min_check(f, vec({0.0, 0.0}), IndexCover::singletons(2));
    out.require(res.is_partial_minimum(), "origin " + to_string(res.status));
    std::mt19937_64 rng(9);
    const auto ring = ring_test([&](const Vec& z) { return f.value(z); }, vec({0.0, 0.0}), rng);
    out.require(!ring.strict_local_minimum && ring.min_gap < 0.0, "ring found nothing smaller");
    out.note("ring min gap " + fmt(ring.min_gap));
    return out;
}

} // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
    criteria.emplace_back("bad local minima of a single neuron", bad_minima);
    criteria.emplace_back("six-piece partition", six_pieces);
    criteria.emplace_back("backprop matches central differences", gradients);
    criteria.emplace_back("convex on every input-space piece", piecewise_convexity);
    criteria.emplace_back("per-layer multi-convexity", multi_convexity);
    std::vector<IcoRun> runs;
    std::string ico_error;
    try {
        runs = ico_runs();
    } catch (const std::exception& e) {
        ico_error = e.what();
    }
    criteria.emplace_back("ICO monotone and bounded", [&] {
        Outcome o;
        o.require(ico_error.empty(), ico_error);
        return ico_error.empty() ? ico_descent(runs) : o;
    });
    criteria.emplace_back("ICO limits are partial minima", [&] {
        Outcome o;
        o.require(ico_error.empty(), ico_error);
        return ico_error.empty() ? ico_limits(runs) : o;
    });
    criteria.emplace_back("gradient descent endpoints", gd_necessary_condition);
    criteria.emplace_back("partial minimum but not local minimum", partial_not_local);

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    }
    return failed == 0 ? 0 : 1;
}
