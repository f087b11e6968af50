#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "pmsys/cli.hpp"

using namespace pmsys;
using nlohmann::json;

namespace {

const std::string kSrc = PMSYS_SOURCE_DIR;
const std::string kFix = kSrc + "/data/fixtures/";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("pmsys_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name)) << content;
    return path(name);
  }
  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  std::filesystem::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("label-status"), std::string::npos);
  r = run({});
  EXPECT_EQ(r.code, cli::kExitValidation);
  r = run({"frobnicate"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("unknown subcommand 'frobnicate'"), std::string::npos) << r.err;
  r = run({"train", "--input", kFix + "users.csv"});
  EXPECT_EQ(r.code, cli::kExitValidation);  // --output is required
  r = run({"stats", "--input", kFix + "users.csv", "--stat", "median"});
  EXPECT_EQ(r.code, cli::kExitValidation);
}

TEST_F(CliTest, MissingFileNamesThePath) {
  const auto r = run({"analyze-text", "--input", "/no/such/file.txt", "--lexicon", kSrc + "/data/lexicon/demo.dic"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("/no/such/file.txt"), std::string::npos) << r.err;
}

TEST_F(CliTest, UnwritableOutputIsARuntimeError) {
  const auto r = run({"segment-timeline", "--input", kFix + "timelines.csv", "--call-window", kFix + "call_window.csv",
                      "--output", "/no/such/dir/out.csv"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("cannot write"), std::string::npos);
}

TEST_F(CliTest, AnalyzeText) {
  const auto in = write("t.txt", "We love this. You hate that!");
  const auto r = run({"analyze-text", "--input", in, "--lexicon", kSrc + "/data/lexicon/demo.dic", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("WC"), 6);
  EXPECT_DOUBLE_EQ(j.at("WPS").get<double>(), 3.0);
}

TEST_F(CliTest, StatsReportsMatchTheLibrary) {
  const auto in = write("m.csv", "a,b,c\n1,2,9\n2,1,7\n3,4,8\n4,3,1\n5,6,2\n6,5,3\n");
  auto r = run({"stats", "--input", in, "--stat", "kendall", "--x", "a", "--y", "b", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  // 15 pairs, 3 discordant
  EXPECT_NEAR(json::parse(r.out).at("value").get<double>(), 9.0 / 15.0, 1e-15);
  r = run({"stats", "--input", in, "--stat", "pearson", "--x", "a", "--y", "zz"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  r = run({"stats", "--input", in, "--stat", "vif", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("predictors").size(), 3u);
  r = run({"stats", "--input", in, "--stat", "mahalanobis", "--columns", "a,b", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out).at("critical").get<double>(), 13.815510557964274, 1e-9);
}

TEST_F(CliTest, ScoreTraitsNeedsExactlyOneSource) {
  auto r = run({"score-traits", "--input", kFix + "questionnaire.csv"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  r = run({"score-traits", "--input", kFix + "questionnaire.csv", "--questionnaire",
           kSrc + "/data/questionnaire/bfi44.txt", "--trait-model", kSrc + "/data/models/extraversion.model"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  r = run({"score-traits", "--input", kFix + "questionnaire.csv", "--questionnaire",
           kSrc + "/data/questionnaire/bfi44.txt"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')),
            "user_id,openness,conscientiousness,extraversion,agreeableness,neuroticism");
}

TEST_F(CliTest, PipelineIsDeterministic) {
  auto pipeline = [&](const std::string& tag) {
    const auto p = [&](const std::string& n) { return path(tag + n); };
    std::vector<std::vector<std::string>> steps = {
        {"label-status", "--input", kFix + "posts.csv", "--responses", kFix + "responses.csv", "--output",
         p("events.json")},
        {"match-users", "--input", kFix + "posts.csv", "--profiles", kFix + "profiles.csv", "--users",
         kFix + "users.csv", "--output", p("matches.json")},
        {"score-traits", "--input", kFix + "questionnaire.csv", "--questionnaire",
         kSrc + "/data/questionnaire/bfi44.txt", "--output", p("traits.csv")},
        {"extract-features", "--input", kFix + "posts.csv", "--events", p("events.json"), "--match-report",
         p("matches.json"), "--users", kFix + "users.csv", "--traits", p("traits.csv"), "--lexicon",
         kSrc + "/data/lexicon/emotions.dic", "--output", p("features.csv")},
        {"train", "--input", p("features.csv"), "--trees", "20", "--seed", "3", "--output", p("forest.json")},
        {"evaluate", "--model", p("forest.json"), "--input", p("features.csv"), "--output", p("eval.json")},
        {"cross-validate", "--input", p("features.csv"), "--folds", "5", "--trees", "20", "--output", p("cv.json")},
    };
    for (const auto& s : steps) {
      const auto r = run(s);
      EXPECT_EQ(r.code, 0) << s[0] << ": " << r.err;
    }
    return slurp(p("features.csv")) + slurp(p("forest.json")) + slurp(p("eval.json")) + slurp(p("cv.json"));
  };
  const auto a = pipeline("a_");
  const auto b = pipeline("b_");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  const auto events = json::parse(slurp(path("a_events.json")));
  EXPECT_EQ(events.at("window_minutes"), 15);
  EXPECT_EQ(events.at("post_count"), 299);
  const auto r = run({"predict", "--model", path("a_forest.json"), "--input", path("a_features.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find(',')), "row");
  // features joined from a different posts file are rejected
  const auto other = write("other.csv", "timestamp,user_ref,platform,text\n2019-01-06 08:00:00,1,helpdesk,x\n");
  const auto bad = run({"extract-features", "--input", other, "--events", path("a_events.json"), "--match-report",
                        path("a_matches.json"), "--users", kFix + "users.csv", "--traits", path("a_traits.csv"),
                        "--lexicon", kSrc + "/data/lexicon/emotions.dic"});
  EXPECT_EQ(bad.code, cli::kExitValidation);
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string bin = PMSYS_BINARY;
  auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("nope"), 1);
  EXPECT_EQ(status("analyze-text --input /missing --lexicon /missing"), 1);
}
