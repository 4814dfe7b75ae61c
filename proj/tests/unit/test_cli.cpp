#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "../../tools/cli.hpp"
#include "patchlr/pgm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using patchlr::Image;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "patchlr");
    std::ostringstream out, err;
    const int code = patchlr::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("patchlr_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const json& j, const std::string& name = "cfg.json") {
        const fs::path p = dir_ / name;
        std::ofstream(p) << j.dump();
        return p;
    }
    fs::path smooth_image(int side) {
        Image z(side);
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c)
                z(r, c) = 128.0 + 60.0 * std::cos(0.3 * r + 0.2 * c);
        const fs::path p = dir_ / "in.pgm";
        patchlr::write_pgm(p, z);
        return p;
    }

    fs::path dir_;
};

json small_run(const fs::path& input, const fs::path& out) {
    return {{"input", input.string()},
            {"out", out.string()},
            {"fraction", 0.5},
            {"patch", {{"patch_n", 4}}},
            {"grouping", {{"group_size", 6}, {"search_radius", 2}}},
            {"admm", {{"max_iters", 30}}}};
}

} // namespace

TEST_F(CliTest, HelpExitsZero) {
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, UnknownSubcommandOrFlagIsConfigError) {
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"verify", "--bogus"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
}

TEST_F(CliTest, UnknownConfigKeysAreAllListed) {
    const auto cfg = write_config({{"admm", {{"rhoo", 1}}}, {"seeed", 2}});
    const CliResult r = run({"verify", "--config", cfg.string(), "--out", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("admm.rhoo"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("seeed"), std::string::npos) << r.err;
}

TEST_F(CliTest, MalformedJsonIsConfigError) {
    const fs::path p = dir_ / "bad.json";
    std::ofstream(p) << "{ not json";
    EXPECT_EQ(run({"verify", "--config", p.string()}).code, 2);
}

TEST_F(CliTest, BadFractionFlagIsConfigError) {
    EXPECT_EQ(run({"inpaint", "--fraction", "1.5", "--input", "x.pgm"}).code, 2);
}

TEST_F(CliTest, MissingFilesAreIoErrors) {
    EXPECT_EQ(run({"inpaint", "--input", (dir_ / "none.pgm").string(), "--out", dir_.string()}).code, 3);
    EXPECT_EQ(run({"verify", "--config", (dir_ / "none.json").string()}).code, 3);
    EXPECT_EQ(run({"psnr", (dir_ / "a.pgm").string(), (dir_ / "b.pgm").string()}).code, 3);
}

TEST_F(CliTest, PsnrOfIdenticalImages) {
    const fs::path p = smooth_image(8);
    const CliResult r = run({"psnr", p.string(), p.string()});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "identical\n");
}

TEST_F(CliTest, InpaintWritesOutputsAndEchoesConfig) {
    const fs::path out = dir_ / "run";
    const auto cfg = write_config(small_run(smooth_image(16), out));
    const CliResult r = run({"inpaint", "--config", cfg.string(), "--seed", "7"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("effective configuration"), std::string::npos);
    for (const char* f : {"effective_config.json", "mask.txt", "reference.pgm", "groups.json", "recovered.pgm",
                          "report.json", "solve_trace.csv"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const json eff = json::parse(slurp(out / "effective_config.json"));
    EXPECT_EQ(eff["seed"], 7);
    EXPECT_EQ(eff["patch"]["patch_n"], 4);
    EXPECT_EQ(eff["admm"]["rho"], 1.0);
    const json rep = json::parse(slurp(out / "report.json"));
    EXPECT_TRUE(rep.contains("psnr_reference"));
    EXPECT_TRUE(rep["solve_report"].contains("primal_trace"));
    EXPECT_EQ(slurp(out / "solve_trace.csv").rfind("iteration,primal_residual,dual_residual,objective\n", 0), 0u);
}

TEST_F(CliTest, InpaintIsDeterministic) {
    const fs::path img = smooth_image(16);
    const auto c1 = write_config(small_run(img, dir_ / "a"), "a.json");
    const auto c2 = write_config(small_run(img, dir_ / "b"), "b.json");
    ASSERT_EQ(run({"inpaint", "--config", c1.string()}).code, 0);
    ASSERT_EQ(run({"inpaint", "--config", c2.string()}).code, 0);
    for (const char* f : {"mask.txt", "reference.pgm", "groups.json", "recovered.pgm", "solve_trace.csv"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(CliTest, InpaintWithMaskFileMatchesGeneratedMask) {
    const fs::path img = smooth_image(16);
    ASSERT_EQ(run({"inpaint", "--config", write_config(small_run(img, dir_ / "a")).string()}).code, 0);
    json j = small_run(img, dir_ / "b");
    j["mask"] = (dir_ / "a" / "mask.txt").string();
    ASSERT_EQ(run({"inpaint", "--config", write_config(j, "b.json").string()}).code, 0);
    EXPECT_EQ(slurp(dir_ / "a" / "recovered.pgm"), slurp(dir_ / "b" / "recovered.pgm"));
}

TEST_F(CliTest, ReferenceWritesGroups) {
    const fs::path out = dir_ / "ref";
    const CliResult r = run({"reference", "--config", write_config(small_run(smooth_image(16), out)).string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json g = json::parse(slurp(out / "groups.json"));
    EXPECT_EQ(g["patch_n"], 4);
    EXPECT_FALSE(g["groups"].empty());
    EXPECT_FALSE(fs::exists(out / "recovered.pgm"));
}

TEST_F(CliTest, VerifyIdentitiesPass) {
    const json j = {{"out", (dir_ / "v").string()},
                    {"patch", {{"patch_n", 4}}},
                    {"synthetic", {{"side", 12}, {"components", 1}}},
                    {"experiment", {{"golfing_seeds", 2}}}};
    const CliResult r = run({"verify", "--config", write_config(j).string()});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    const json v = json::parse(slurp(dir_ / "v" / "verify.json"));
    for (const auto& row : v["checks"])
        if (row["kind"] != "probabilistic")
            EXPECT_TRUE(row["pass"].get<bool>()) << row["check"];
}

TEST_F(CliTest, PhaseAtFullSamplingSucceeds) {
    const json j = {{"out", (dir_ / "p").string()},
                    {"patch", {{"patch_n", 3}}},
                    {"synthetic", {{"side", 12}, {"components", 1}}},
                    {"experiment", {{"m_grid", {144}}, {"trials", 3}}}};
    const CliResult r = run({"phase-transition", "--config", write_config(j).string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("144,3,3,"), std::string::npos) << r.out;
    EXPECT_EQ(slurp(dir_ / "p" / "phase.csv").rfind("m,trials,successes,mean_rel_error\n", 0), 0u);
}
