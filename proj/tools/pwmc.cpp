#include "commands.hpp"

#include <CLI11.hpp>

namespace {

void add_problem_options(CLI::App* cmd, pwmc::cli::ProblemFiles& f) {
    cmd->add_option("--net", f.net, "network JSON");
    cmd->add_option("--data", f.data, "dataset CSV (x0.., y0..)");
    cmd->add_option("--params", f.params, "parameter CSV; random He init from --seed if absent");
    cmd->add_option("--fixture", f.fixture, "analytic objective: abs, square, min_x4, xy, autoencoder");
    cmd->add_option("--x0", f.x0, "start point for --fixture, comma separated (use --x0=-1,2 for negatives)");
    cmd->add_option("--seed", f.seed, "random seed");
}

} // namespace

int main(int argc, char** argv) {
    using namespace pwmc::cli;
    CLI::App app{"piecewise multi-convex training and certification tools"};
    app.require_subcommand(1);

    SurfaceOptions surface;
    auto* s = app.add_subcommand("surface", "sample the two-layer example surface on [0,1]^2");
    s->add_option("--res", surface.resolution, "grid points per axis")->capture_default_str();
    s->add_option("--out", surface.out, "output CSV")->required();

    BadMinOptions badmin;
    auto* b = app.add_subcommand("badmin", "single-neuron local minima study");
    b->add_option("--alpha", badmin.alpha, "dataset parameter, must exceed 1")->capture_default_str();
    b->add_flag("--unit-variance", badmin.unit_variance, "append floor(alpha) copies of (1, 2 alpha)");
    b->add_option("--out", badmin.out_dir, "output directory")->capture_default_str();
    b->add_option("--seed", badmin.seed, "random seed")->capture_default_str();
    b->add_option("--schedule", badmin.schedule, "harmonic:c or const:c")->capture_default_str();
    b->add_option("--random-starts", badmin.random_starts, "random gradient descent starts")->capture_default_str();

    TrainOptions train;
    auto* t = app.add_subcommand("train", "gradient descent or iterative convex optimization");
    add_problem_options(t, train.files);
    t->add_option("--algo", train.algo, "gd or ico")->capture_default_str();
    t->add_option("--lambda", train.lambda, "ico regularization weight")->capture_default_str();
    t->add_option("--norm", train.norm, "l2 or l1")->capture_default_str();
    t->add_option("--mode", train.mode, "jacobi or seidel")->capture_default_str();
    t->add_option("--schedule", train.schedule, "gd step schedule, harmonic:c or const:c")->capture_default_str();
    t->add_option("--cover", train.cover, "layers, joint or singletons")->capture_default_str();
    t->add_option("--grad-tol", train.grad_tol, "gd gradient tolerance")->capture_default_str();
    t->add_option("--max-iters", train.max_iters, "iteration cap (0: default)");
    t->add_option("--stride", train.stride, "record every k-th gd iterate")->capture_default_str();
    t->add_flag("--with-params", train.with_params, "include parameters in the trace");
    t->add_option("--trace", train.out_trace, "trace CSV")->capture_default_str();
    t->add_option("--summary", train.out_summary, "summary JSON")->capture_default_str();

    CertifyOptions certify;
    auto* c = app.add_subcommand("certify", "statistical convexity and stationarity audits");
    add_problem_options(c, certify.files);
    c->add_option("--check", certify.check, "multiconvexity, input-pieces or stationary")->capture_default_str();
    c->add_option("--cover", certify.cover, "layers, joint or singletons")->capture_default_str();
    c->add_option("--samples", certify.samples, "base points")->capture_default_str();
    c->add_option("--trials", certify.trials, "chord trials per region")->capture_default_str();
    c->add_option("--eps", certify.eps, "chord slack tolerance")->capture_default_str();
    c->add_option("--grad-tol", certify.grad_tol, "stationarity tolerance")->capture_default_str();
    c->add_option("--box", certify.box_radius, "sampling box for unbounded pieces")->capture_default_str();
    c->add_option("--out", certify.out, "report JSON")->capture_default_str();

    PiecesOptions pieces;
    auto* p = app.add_subcommand("pieces", "enumerate full-dimensional pieces");
    add_problem_options(p, pieces.files);
    p->add_option("--space", pieces.space, "input or layer:m")->capture_default_str();
    p->add_option("--cap", pieces.cap, "refuse beyond this many pieces")->capture_default_str();
    p->add_option("--out", pieces.out, "pieces JSON")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : input_error;
    }

    return guarded(
        [&] {
            if (s->parsed()) {
                return run_surface(surface, std::cout);
            }
            if (b->parsed()) {
                return run_badmin(badmin, std::cout);
            }
            if (t->parsed()) {
                return run_train(train, std::cout);
            }
            if (c->parsed()) {
                return run_certify(certify, std::cout);
            }
            return run_pieces(pieces, std::cout);
        },
        std::cerr);
}
