#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ed3/json_io.hpp"

namespace fs = std::filesystem;
using ed3::io::json;

namespace {

int run(const std::string &args) {
    const std::string cmd = std::string(ED3_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Small pools shared by the tests in this file.
class CliPipeline : public ::testing::Test {
   protected:
    static void SetUpTestSuite() {
        root_ = fs::temp_directory_path() / ("ed3_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(root_);
        fs::create_directories(root_);
        ASSERT_EQ(run("simulate --state normal --n 60 --seed 1 --out " + (root_ / "normal").string()), 0);
        ASSERT_EQ(run("simulate --state erroneous --lambda 0.1 --n 20 --seed 5000 --out " + (root_ / "err").string()),
                  0);
    }

    static fs::path root_;
};

fs::path CliPipeline::root_;

}  // namespace

TEST(CliArgs, MissingOrUnknownSubcommand) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST(CliArgs, InvalidOptions) {
    const auto out = (fs::temp_directory_path() / "ed3_cli_args").string();
    EXPECT_EQ(run("simulate --state sideways --out " + out), 2);
    EXPECT_EQ(run("simulate --lambda 0.7 --out " + out), 2);
    EXPECT_EQ(run("simulate --pairs 100 --pairs-per-run 1000 --out " + out), 2);
    EXPECT_EQ(run("detect --in /nonexistent/ds.json --out " + out), 2);
}

TEST(CliArgs, UnwritableOutputIsIoFailure) {
    const fs::path blocker = fs::temp_directory_path() / "ed3_cli_blocker";
    fs::remove_all(blocker);
    std::ofstream(blocker) << "file";
    EXPECT_EQ(run("simulate --n 1 --out " + (blocker / "sub").string()), 4);
}

TEST_F(CliPipeline, SimulateWritesManifestDeterministically) {
    const auto manifest = ed3::io::read_json(root_ / "normal" / "manifest.json");
    EXPECT_EQ(manifest["members"].size(), 60u);
    EXPECT_NEAR(manifest["pairs_per_setting"].get<double>(), 250.0, 1e-9);
    EXPECT_TRUE(fs::exists(root_ / "normal" / "member_00059.json"));
    ASSERT_EQ(run("simulate --state normal --n 60 --seed 1 --workers 3 --out " + (root_ / "normal2").string()), 0);
    EXPECT_EQ(slurp(root_ / "normal" / "manifest.json"), slurp(root_ / "normal2" / "manifest.json"));
    EXPECT_EQ(slurp(root_ / "normal" / "member_00042.json"), slurp(root_ / "normal2" / "member_00042.json"));
}

TEST_F(CliPipeline, ExplicitPerSettingCounts) {
    ASSERT_EQ(run("simulate --n 2 --pairs 1000 --out " + (root_ / "per_setting").string()), 0);
    EXPECT_EQ(ed3::io::read_json(root_ / "per_setting" / "manifest.json")["pairs_per_setting"], 1000.0);
}

TEST_F(CliPipeline, SampleAndDetect) {
    const auto ds = root_ / "ds.json";
    ASSERT_EQ(run("sample --normal " + (root_ / "normal").string() + " --erroneous " + (root_ / "err").string() +
                  " --seed 3 --out " + ds.string()),
              0);
    const auto out = root_ / "detect";
    ASSERT_EQ(run("detect --method both --gamma 0.8 --in " + ds.string() + " --out " + out.string()), 0);
    const auto scores = ed3::io::read_json(out / "scores_ed3.json");
    EXPECT_EQ(scores["scores"].size(), 30u);
    EXPECT_EQ(scores["labels"].size(), 30u);
    EXPECT_TRUE(fs::exists(out / "scores_naive.json"));
    EXPECT_TRUE(fs::exists(out / "decomposition.json"));
    EXPECT_TRUE(fs::exists(out / "detect_config.json"));
    std::ifstream table(out / "trace_table.csv");
    std::string header;
    std::getline(table, header);
    EXPECT_EQ(header,
              "k,erroneous,raw_1_2,raw_1_4,raw_2_2,naive_score,estimated_1_2,estimated_1_4,estimated_2_2,ed3_score");

    EXPECT_EQ(run("detect --method ed3 --in " + ds.string() + " --out " + out.string()), 2);
    EXPECT_EQ(run("detect --method ed3 --gamma 0.01 --admm-max-iterations 1 --in " + ds.string() + " --out " +
                  (root_ / "capped").string()),
              3);
    EXPECT_TRUE(fs::exists(root_ / "capped" / "decomposition.json"));
}

TEST_F(CliPipeline, NaiveOnIdenticalMatricesScoresZero) {
    ed3::io::DatasetFile d;
    d.matrices = std::vector<ed3::RealMatrix>(4, ed3::RealMatrix::Identity(4, 4) * 0.25);
    ed3::io::write_json(root_ / "same.json", ed3::io::to_json(d));
    ASSERT_EQ(run("detect --method naive --in " + (root_ / "same.json").string() + " --out " +
                  (root_ / "same").string()),
              0);
    for (const auto &s : ed3::io::read_json(root_ / "same" / "scores_naive.json")["scores"]) EXPECT_EQ(s, 0.0);
}

TEST_F(CliPipeline, MalformedDatasetIsInvalidArgument) {
    std::ofstream(root_ / "broken.json") << "{\"matrices\": [";
    EXPECT_EQ(run("detect --method naive --in " + (root_ / "broken.json").string() + " --out " +
                  (root_ / "broken").string()),
              2);
}

TEST_F(CliPipeline, EvaluateSingleDatasetWithOracle) {
    const auto out = root_ / "eval";
    ASSERT_EQ(run("evaluate --normal " + (root_ / "normal").string() + " --erroneous " + (root_ / "err").string() +
                  " --n-datasets 1 --n-preliminary 2 --oracle-self-test --out " + out.string()),
              0);
    const auto report = ed3::io::read_json(out / "report.json");
    EXPECT_EQ(report["naive"]["auc_values"].size(), 1u);
    EXPECT_EQ(report["ed3"]["auc_values"].size(), 1u);
    EXPECT_EQ(report["oracle"]["mean"], 100.0);
    EXPECT_TRUE(report.contains("paired_delta_mean"));
    EXPECT_EQ(report["histogram_bins"].size(), 21u);
    EXPECT_TRUE(fs::exists(out / "histogram.csv"));
    EXPECT_TRUE(fs::exists(out / "roc" / "ed3_0000.csv"));
}

TEST_F(CliPipeline, OutputDirectoryFromEnvironment) {
    const std::string env = "ED3_OUTPUT_DIR=" + (root_ / "envout").string() + " ";
    const std::string cmd = env + ED3_CLI_PATH + " simulate --n 1 >/dev/null 2>&1";
    ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
    EXPECT_TRUE(fs::exists(root_ / "envout" / "simulate" / "manifest.json"));
}
