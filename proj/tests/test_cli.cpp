#include "commands.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace pwmc;
using namespace pwmc::cli;

namespace {

namespace fs = std::filesystem;

const std::string data_dir = PWMC_DATA_DIR;

std::string d(const std::string& file) { return data_dir + "/" + file; }

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("pwmc_cli_test_" + std::to_string(::getpid())) / name;
    fs::create_directories(dir);
    return dir;
}

json read_json(const fs::path& p) { return json::parse(io::read_file(p.string())); }

std::vector<std::vector<double>> read_rows(const fs::path& p) {
    std::istringstream in(io::read_file(p.string()));
    std::string line;
    std::getline(in, line); // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> r;
        std::istringstream cells(line);
        std::string c;
        while (std::getline(cells, c, ',')) {
            r.push_back(std::stod(c));
        }
        rows.push_back(r);
    }
    return rows;
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(PWMC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::ostringstream sink;

} // namespace

TEST(Surface, GridMatchesClosedForm) {
    const auto dir = scratch("surface");
    ASSERT_EQ(run_surface({21, (dir / "s.csv").string()}, sink), ok);
    const auto rows = read_rows(dir / "s.csv");
    ASSERT_EQ(rows.size(), 21u * 21u);
    for (const auto& r : rows) {
        ASSERT_EQ(r.size(), 4u);
        EXPECT_NEAR(r[2], oracle::surface(r[0], r[1]), 1e-12);
        EXPECT_GE(r[3], 0.0) << r[0] << "," << r[1];
        if (r[0] == 0.0 && r[1] == 0.0) {
            EXPECT_DOUBLE_EQ(r[2], 1.0);
        }
        if (r[0] == 0.0 && r[1] == 1.0) {
            EXPECT_DOUBLE_EQ(r[2], 4.0);
        }
    }
}

TEST(Surface, TooCoarseGridIsAnInputError) {
    EXPECT_EQ(run_binary("surface --res 1 --out " + (scratch("surface_bad") / "s.csv").string()), input_error);
}

TEST(BadMin, AlphaTwoValues) {
    const auto dir = scratch("badmin2");
    BadMinOptions opt;
    opt.alpha = 2.0;
    opt.out_dir = dir.string();
    ASSERT_EQ(run_badmin(opt, sink), ok);
    const auto j = read_json(dir / "badmin.json");
    EXPECT_TRUE(j["pass"].get<bool>());
    EXPECT_DOUBLE_EQ(j["minima"][0]["summed_evaluated"].get<double>(), 16.0);
    EXPECT_DOUBLE_EQ(j["minima"][1]["summed_evaluated"].get<double>(), 4.0);
    EXPECT_DOUBLE_EQ(j["minima"][0]["summed_evaluated"].get<double>(), oracle::neuron_sum(-1.5, 0.5, 2.0));
    EXPECT_DOUBLE_EQ(j["separation"].get<double>(), 5.0);
    EXPECT_EQ(j["pieces"], 6);
    EXPECT_EQ(j["minima"][0]["gd_reached"], j["minima"][0]["gd_starts"]);
    EXPECT_EQ(j["minima"][1]["gd_reached"], j["minima"][1]["gd_starts"]);
    EXPECT_TRUE(fs::exists(dir / "trace_high.csv"));
    EXPECT_TRUE(fs::exists(dir / "trace_low.csv"));
}

TEST(BadMin, GapGrowsAsThreeAlphaSquared) {
    double previous = 0.0;
    for (double alpha : {1.5, 2.0, 3.0, 5.0, 8.0}) {
        const auto dir = scratch("badmin_gap_" + std::to_string(alpha));
        BadMinOptions opt;
        opt.alpha = alpha;
        opt.out_dir = dir.string();
        opt.random_starts = 2;
        ASSERT_EQ(run_badmin(opt, sink), ok) << alpha;
        const auto j = read_json(dir / "badmin.json");
        const double gap = j["summed_gap"].get<double>();
        EXPECT_NEAR(gap, 3.0 * alpha * alpha, 1e-9 * alpha * alpha);
        EXPECT_NEAR(j["separation"].get<double>(), 3.0 * alpha - 1.0, 1e-12);
        EXPECT_GT(gap, previous);
        previous = gap;
    }
}

TEST(BadMin, UnitVarianceVariant) {
    const auto dir = scratch("badmin_uv");
    BadMinOptions opt;
    opt.alpha = 3.0;
    opt.unit_variance = true;
    opt.out_dir = dir.string();
    opt.random_starts = 2;
    ASSERT_EQ(run_badmin(opt, sink), ok);
    const auto j = read_json(dir / "badmin.json");
    EXPECT_EQ(j["points"], 6);
    // three extra copies of (1, 6) stay dead at the high minimum
    EXPECT_NEAR(j["minima"][0]["summed_evaluated"].get<double>(), 36.0 * 4.0, 1e-9);
    EXPECT_NEAR(j["minima"][1]["summed_evaluated"].get<double>(), 9.0, 1e-9);
}

TEST(BadMin, AlphaAtMostOneIsRejected) {
    EXPECT_EQ(run_binary("badmin --alpha 1 --out " + scratch("badmin_reject").string()), input_error);
    EXPECT_EQ(run_binary("badmin --alpha 0.5 --out " + scratch("badmin_reject").string()), input_error);
}

TEST(Train, GradientDescentOnSingleNeuronReachesAuditedStationaryPoint) {
    const auto dir = scratch("train_gd");
    TrainOptions opt;
    opt.files = {d("neuron_net.json"), d("neuron_alpha2.csv"), d("neuron_start.csv"), "", "", 1};
    opt.schedule = "const:0.5";
    opt.out_trace = (dir / "t.csv").string();
    opt.out_summary = (dir / "s.json").string();
    ASSERT_EQ(run_train(opt, sink), ok);
    const auto j = read_json(dir / "s.json");
    EXPECT_EQ(j["termination"], "converged");
    EXPECT_EQ(j["stationary_point_audit"]["verdict"], "pass");
    // every point alive: least-squares line through (0, .5), (-1, 2), (1, 4)
    EXPECT_NEAR(j["final_params"][0].get<double>(), 1.0, 1e-5);
    EXPECT_NEAR(j["final_params"][1].get<double>(), 13.0 / 6.0, 1e-5);
}

TEST(Train, ConstantStepOnAbsoluteValueHitsIterationCap) {
    const auto dir = scratch("train_abs");
    TrainOptions opt;
    opt.files.fixture = "abs";
    opt.files.x0 = "0.05";
    opt.schedule = "const:0.3";
    opt.max_iters = 500;
    opt.out_trace = (dir / "t.csv").string();
    opt.out_summary = (dir / "s.json").string();
    EXPECT_EQ(run_train(opt, sink), not_converged);
    const auto j = read_json(dir / "s.json");
    EXPECT_EQ(j["termination"], "max_iters");
    EXPECT_FALSE(j["warnings"].empty());
    EXPECT_EQ(read_rows(dir / "t.csv").size(), 501u);
}

TEST(Train, IcoOnScalarAutoencoderIsMonotone) {
    const auto dir = scratch("train_ico");
    TrainOptions opt;
    opt.algo = "ico";
    opt.files.fixture = "autoencoder";
    opt.files.x0 = "0.3,0.2";
    opt.out_trace = (dir / "t.csv").string();
    opt.out_summary = (dir / "s.json").string();
    ASSERT_EQ(run_train(opt, sink), ok);
    const auto rows = read_rows(dir / "t.csv");
    ASSERT_GE(rows.size(), 2u);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        EXPECT_LE(rows[k][1], rows[k - 1][1] + 1e-10) << "iteration " << k;
    }
    const auto j = read_json(dir / "s.json");
    EXPECT_TRUE(j["monotone"].get<bool>());
    EXPECT_TRUE(j["norm_bound_ok"].get<bool>());
    EXPECT_EQ(j["partial_min_check"], "partial_minimum");
}

TEST(Train, IcoOnReluNetworkFromFiles) {
    const auto dir = scratch("train_relu");
    for (const char* mode : {"jacobi", "seidel"}) {
        TrainOptions opt;
        opt.algo = "ico";
        opt.mode = mode;
        opt.files = {d("relu3_net.json"), d("relu3_data.csv"), "", "", "", 3};
        opt.out_trace = (dir / "t.csv").string();
        opt.out_summary = (dir / "s.json").string();
        EXPECT_EQ(run_train(opt, sink), ok) << mode;
        const auto j = read_json(dir / "s.json");
        EXPECT_TRUE(j["monotone"].get<bool>()) << mode;
        EXPECT_TRUE(j["norm_bound_ok"].get<bool>()) << mode;
    }
}

TEST(Train, InputErrorsExitWithTwo) {
    const auto dir = scratch("train_errors");
    EXPECT_EQ(run_binary("train --net " + d("neuron_net.json") + " --data " + d("surface_target.csv")), input_error);
    EXPECT_EQ(run_binary("train --fixture nope"), input_error);
    EXPECT_EQ(run_binary("train --fixture abs --schedule linear:1"), input_error);
    EXPECT_EQ(run_binary("train --algo ico --fixture autoencoder --lambda -1"), input_error);
    EXPECT_EQ(run_binary("nosuchcommand"), input_error);
}

TEST(Certify, SurfaceInputPiecesPass) {
    const auto dir = scratch("certify_surface");
    CertifyOptions opt;
    opt.files = {d("surface_net.json"), d("surface_target.csv"), d("surface_params.csv"), "", "", 5};
    opt.check = "input-pieces";
    opt.box_radius = 2.0;
    opt.out = (dir / "a.json").string();
    EXPECT_EQ(run_certify(opt, sink), ok);
    const auto j = read_json(dir / "a.json");
    EXPECT_EQ(j["verdict"], "pass");
    EXPECT_EQ(j["metrics"]["pieces"], 6.0);
}

TEST(Certify, PerLayerPassesAndJointFails) {
    const auto dir = scratch("certify_cover");
    CertifyOptions opt;
    opt.files = {d("relu3_net.json"), d("relu3_data.csv"), "", "", "", 2};
    opt.samples = 3;
    opt.out = (dir / "a.json").string();
    EXPECT_EQ(run_certify(opt, sink), ok);

    opt.files = {d("linear_chain_net.json"), d("bilinear_data.csv"), "", "", "", 2};
    opt.cover = "joint";
    EXPECT_EQ(run_certify(opt, sink), audit_failed);
    EXPECT_EQ(read_json(dir / "a.json")["verdict"], "fail");
    opt.cover = "layers";
    EXPECT_EQ(run_certify(opt, sink), ok);
}

TEST(Certify, StationaryAuditRefusesKinks) {
    // b = 0 puts the x = 0 point exactly on its kink
    const auto dir = scratch("certify_kink");
    io::write_file((dir / "p.csv").string(), "1,0\n");
    EXPECT_EQ(run_binary("certify --check stationary --net " + d("neuron_net.json") + " --data " +
                         d("neuron_alpha2.csv") + " --params " + (dir / "p.csv").string() + " --out " +
                         (dir / "a.json").string()),
              input_error);
}

TEST(Pieces, SingleNeuronSixPiecesAndCap) {
    const auto dir = scratch("pieces");
    PiecesOptions opt;
    opt.files = {d("neuron_net.json"), d("neuron_alpha2.csv"), d("neuron_start.csv"), "", "", 1};
    opt.space = "layer:0";
    opt.out = (dir / "p.json").string();
    ASSERT_EQ(run_pieces(opt, sink), ok);
    const auto j = read_json(dir / "p.json");
    ASSERT_EQ(j.size(), 6u);
    EXPECT_EQ(j[0]["halfspaces"].size(), 3u);
    EXPECT_EQ(run_binary("pieces --net " + d("neuron_net.json") + " --data " + d("neuron_alpha2.csv") +
                         " --space layer:0 --cap 2 --out " + (dir / "q.json").string()),
              input_error);
    EXPECT_EQ(run_binary("pieces --net " + d("neuron_net.json") + " --data " + d("neuron_alpha2.csv") +
                         " --space layer:7 --out " + (dir / "q.json").string()),
              input_error);
}

TEST(Determinism, SameSeedSameBytes) {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    for (const auto& dir : {a, b}) {
        BadMinOptions bm;
        bm.out_dir = dir.string();
        bm.seed = 42;
        ASSERT_EQ(run_badmin(bm, sink), ok);
        TrainOptions tr;
        tr.algo = "ico";
        tr.files = {d("relu3_net.json"), d("relu3_data.csv"), "", "", "", 9};
        tr.with_params = true;
        tr.out_trace = (dir / "t.csv").string();
        tr.out_summary = (dir / "s.json").string();
        ASSERT_EQ(run_train(tr, sink), ok);
    }
    for (const char* f : {"badmin.json", "trace_high.csv", "t.csv", "s.json"}) {
        EXPECT_EQ(io::read_file((a / f).string()), io::read_file((b / f).string())) << f;
    }
}
