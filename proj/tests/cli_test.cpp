#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "pano/io/json.hpp"
#include "pano/io/pfm.hpp"

namespace fs = std::filesystem;
using namespace pano;

namespace {

const std::string kFixtures = PANO_FIXTURE_DIR;

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "panogeo");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string golden(const std::string& name) {
    const auto bytes = io::read_file(kFixtures + "/golden/" + name + ".json");
    return {bytes.begin(), bytes.end()};
}

std::string fixture(const std::string& name) { return kFixtures + "/" + name; }

class CliFiles : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("panogeo_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

}  // namespace

TEST(Cli, GoldenReports) {
    const std::string pred = fixture("pred_4x8.pfm"), gt = fixture("gt_4x8.pfm");
    const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
        {"cle_8x16_n4_r0", {"cle", "--height", "8", "--width", "16", "--window", "4", "--row", "0"}},
        {"gspe_2x4", {"gspe", "--height", "2", "--width", "4"}},
        {"align", {"align", "--pred", pred, "--gt", gt}},
        {"eval", {"eval", "--pred", pred, "--gt", gt}},
        {"eval_align", {"eval", "--pred", pred, "--gt", gt, "--align"}},
        {"loss", {"loss", "--pred", pred, "--gt", gt, "--grad-check"}},
        {"attn_demo_s7_h32", {"attn-demo", "--seed", "7", "--height", "32", "--window", "4", "--json", "-"}},
    };
    for (const auto& [name, args] : cases) {
        const CliRun r = run(args);
        EXPECT_EQ(r.code, 0) << name << ": " << r.err;
        EXPECT_EQ(r.out, golden(name)) << name;
    }
}

TEST(Cli, EvalOfIdenticalMapsIsPerfect) {
    const CliRun r = run({"eval", "--pred", fixture("gt_4x8.pfm"), "--gt", fixture("gt_4x8.pfm")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::Json::parse(r.out);
    EXPECT_EQ(j["metrics"]["abs_rel"].get<double>(), 0.0);
    EXPECT_EQ(j["metrics"]["delta1"].get<double>(), 1.0);
    EXPECT_EQ(j["inputs"]["pred"], j["inputs"]["gt"]);
}

TEST(Cli, ByteOrderDoesNotChangeMetrics) {
    const CliRun a = run({"eval", "--pred", fixture("pred_4x8.pfm"), "--gt", fixture("gt_4x8.pfm")});
    const CliRun b = run({"eval", "--pred", fixture("pred_4x8.pfm"), "--gt", fixture("gt_4x8_be.pfm")});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(io::Json::parse(a.out)["metrics"], io::Json::parse(b.out)["metrics"]);
}

TEST(Cli, AttnDemoIsDeterministic) {
    const CliRun a = run({"attn-demo", "--seed", "7", "--height", "32"});
    const CliRun b = run({"attn-demo", "--seed", "7", "--height", "32"});
    const CliRun c = run({"attn-demo", "--seed", "8", "--height", "32"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out, c.out);
    const auto j = io::Json::parse(a.out);
    EXPECT_TRUE(j["checks"]["depth_positive"].get<bool>());
    EXPECT_TRUE(j["checks"]["attention_rows_stochastic"].get<bool>());
}

TEST_F(CliFiles, RotateByZeroKeepsPayload) {
    for (const char* name : {"gt_4x8.pfm", "gt_4x8_be.pfm", "rgb_8x16.pfm"}) {
        const CliRun r = run({"rotate", "--in", fixture(name), "--out", path("out.pfm"), "--cols", "0"});
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_EQ(io::read_file(path("out.pfm")), io::read_file(fixture(name))) << name;
    }
}

TEST_F(CliFiles, RotateThenInverseRestoresFile) {
    ASSERT_EQ(run({"rotate", "--in", fixture("rgb_8x16.pfm"), "--out", path("a.pfm"), "--cols", "-37"}).code, 0);
    EXPECT_NE(io::read_file(path("a.pfm")), io::read_file(fixture("rgb_8x16.pfm")));
    ASSERT_EQ(run({"rotate", "--in", path("a.pfm"), "--out", path("b.pfm"), "--cols", "-37", "--inverse"}).code, 0);
    EXPECT_EQ(io::read_file(path("b.pfm")), io::read_file(fixture("rgb_8x16.pfm")));
}

TEST_F(CliFiles, BrpRoundTripStaysClose) {
    ASSERT_EQ(run({"brp", "--in", fixture("rgb_8x16.pfm"), "--out", path("f.pfm")}).code, 0);
    ASSERT_EQ(run({"brp", "--in", path("f.pfm"), "--out", path("b.pfm"), "--inverse"}).code, 0);
    const ErpTensor a = io::to_tensor(io::read_pfm(fixture("rgb_8x16.pfm")));
    const ErpTensor b = io::to_tensor(io::read_pfm(path("b.pfm")));
    EXPECT_EQ(a.shape(), b.shape());
    EXPECT_LT(max_abs_difference(a, b), 1.0);
}

TEST_F(CliFiles, AlignWritesAlignedPrediction) {
    const CliRun r = run({"align", "--pred", fixture("pred_4x8.pfm"), "--gt", fixture("gt_4x8.pfm"), "--out",
                       path("aligned.pfm"), "--json", path("report.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    const auto report = io::read_file(path("report.json"));
    EXPECT_EQ(std::string(report.begin(), report.end()), golden("align"));
    const CliRun again = run({"align", "--pred", path("aligned.pfm"), "--gt", fixture("gt_4x8.pfm")});
    const auto j = io::Json::parse(again.out);
    EXPECT_NEAR(j["align"]["s"].get<double>(), 1.0, 1e-6);
    EXPECT_NEAR(j["align"]["t"].get<double>(), 0.0, 1e-6);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({"eval", "--pred", "a.pfm", "--gt", "b.pfm", "--bogus"}).code, 2);
    EXPECT_EQ(run({"eval", "--pred", "a.pfm"}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"cle", "--height", "x", "--width", "4", "--window", "2", "--row", "0"}).code, 2);
    const CliRun none = run({});
    EXPECT_EQ(none.code, 2);
    EXPECT_FALSE(none.err.empty());
}

TEST(Cli, DataErrorsExitThree) {
    const CliRun missing = run({"eval", "--pred", fixture("nope.pfm"), "--gt", fixture("gt_4x8.pfm")});
    EXPECT_EQ(missing.code, 3);
    EXPECT_NE(missing.err.find("nope.pfm"), std::string::npos);
    EXPECT_EQ(run({"eval", "--pred", fixture("rgb_8x16.pfm"), "--gt", fixture("gt_4x8.pfm")}).code, 3);
    EXPECT_EQ(run({"cle", "--height", "8", "--width", "16", "--window", "3", "--row", "0"}).code, 3);
    EXPECT_EQ(run({"attn-demo", "--seed", "1", "--height", "48"}).code, 3);
    EXPECT_EQ(run({"brp", "--in", fixture("gt_4x8.pfm"), "--out", "/nonexistent/dir/x.pfm"}).code, 3);
}

TEST(Cli, HelpAndVersion) {
    const CliRun help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("attn-demo"), std::string::npos);
    const CliRun version = run({"--version"});
    EXPECT_EQ(version.code, 0);
    EXPECT_EQ(version.out, std::string(cli::kVersion) + "\n");
}
