// End-to-end tests driving the installed CLI binary as a subprocess.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

const std::string kCli = SANDI_CLI_PATH;
const std::string kFixtures = SANDI_FIXTURE_DIR;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string command = kCli + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  RunResult result;
  char buffer[512];
  while (fgets(buffer, sizeof(buffer), pipe)) result.output += buffer;
  const int status = pclose(pipe);
  result.exit_code = WEXITSTATUS(status);
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.is_open()) << path;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string toy(const std::string& name) { return kFixtures + "/toy/" + name; }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string align_args(const fs::path& out) {
  return "align --embeddings " + toy("embeddings.txt") + " --story " + toy("coast.json") +
         " --story " + toy("peaks.json") + " --story " + toy("city.json") + " --pool " +
         toy("pool.json") + " --mode complete --solver exact --out " + out.string();
}

TEST(CliAlign, CompleteRecoversToyGroundTruth) {
  const auto out = fresh_dir("cli_align");
  auto result = run_cli(align_args(out));
  ASSERT_EQ(result.exit_code, 0) << result.output;

  for (const std::string story : {"coast", "peaks", "city"}) {
    const auto alignment =
        nlohmann::json::parse(slurp(out / (story + ".alignment.json")));
    const auto story_doc = nlohmann::json::parse(slurp(toy(story + ".json")));
    EXPECT_EQ(alignment["assignments"], story_doc["ground_truth"]) << story;
    EXPECT_TRUE(fs::exists(out / (story + ".similarity.csv")));
  }
}

TEST(CliAlign, ByteIdenticalAcrossRuns) {
  const auto out1 = fresh_dir("cli_det1");
  const auto out2 = fresh_dir("cli_det2");
  ASSERT_EQ(run_cli(align_args(out1)).exit_code, 0);
  ASSERT_EQ(run_cli(align_args(out2)).exit_code, 0);
  for (const std::string story : {"coast", "peaks", "city"}) {
    for (const std::string suffix : {".alignment.json", ".similarity.csv"}) {
      EXPECT_EQ(slurp(out1 / (story + suffix)), slurp(out2 / (story + suffix)))
          << story << suffix;
    }
  }
}

TEST(CliAlign, SelectiveWithoutBudgetIsUsageError) {
  const auto out = fresh_dir("cli_nobudget");
  auto result = run_cli("align --embeddings " + toy("embeddings.txt") + " --story " +
                        toy("coast.json") + " --pool " + toy("pool.json") +
                        " --mode selective --out " + out.string());
  EXPECT_EQ(result.exit_code, 1);
  EXPECT_NE(result.output.find("budget"), std::string::npos);
}

TEST(CliAlign, MissingFileIsDataError) {
  const auto out = fresh_dir("cli_missing");
  auto result = run_cli("align --embeddings " + toy("embeddings.txt") +
                        " --story /nonexistent/story.json --pool " + toy("pool.json") +
                        " --out " + out.string());
  EXPECT_EQ(result.exit_code, 2);
}

TEST(CliAlign, InfeasibleInstanceExitsThree) {
  const auto out = fresh_dir("cli_infeasible");
  const fs::path story = out / "tiny.json";
  const fs::path pool = out / "untagged.json";
  {
    std::ofstream s(story);
    s << R"({"id": "tiny", "paragraphs": ["beach day", "harbor night"]})";
    std::ofstream p(pool);
    p << R"({"images": [{"id": "a", "tags": {"man": ["beach"]}},
                         {"id": "b", "tags": {"man": ["harbor"]}},
                         {"id": "c", "tags": {"man": ["sunset"]}}]})";
  }
  auto result = run_cli("align --embeddings " + toy("embeddings.txt") + " --story " +
                        story.string() + " --pool " + pool.string() +
                        " --mode complete --out " + out.string());
  EXPECT_EQ(result.exit_code, 3) << result.output;
}

TEST(CliAlign, SelectiveBudgetPlacesExactlyB) {
  const auto out = fresh_dir("cli_selective");
  auto result = run_cli("align --embeddings " + toy("embeddings.txt") + " --story " +
                        toy("coast.json") + " --pool " + toy("pool.json") +
                        " --mode selective --budget 2 --solver exact --out " + out.string());
  ASSERT_EQ(result.exit_code, 0) << result.output;
  const auto alignment = nlohmann::json::parse(slurp(out / "coast.alignment.json"));
  EXPECT_EQ(alignment["assignments"].size(), 2u);
}

TEST(CliAlign, RandomSolverIsSeedDeterministic) {
  const auto out1 = fresh_dir("cli_rand1");
  const auto out2 = fresh_dir("cli_rand2");
  const std::string base = "align --embeddings " + toy("embeddings.txt") + " --story " +
                           toy("coast.json") + " --pool " + toy("pool.json") +
                           " --mode selective --budget 3 --solver random --seed 7 --out ";
  ASSERT_EQ(run_cli(base + out1.string()).exit_code, 0);
  ASSERT_EQ(run_cli(base + out2.string()).exit_code, 0);
  EXPECT_EQ(slurp(out1 / "coast.alignment.json"), slurp(out2 / "coast.alignment.json"));
}

TEST(CliAlign, CskEnrichmentRuns) {
  const auto out = fresh_dir("cli_csk");
  auto result = run_cli(align_args(out) + " --assertions " + toy("assertions.tsv") +
                        " --snippets " + toy("snippets.json") + " --tau 0.5");
  EXPECT_EQ(result.exit_code, 0) << result.output;
}

TEST(CliAlign, ExactBeatsGreedyBeatsMeanRandomObjective) {
  const auto out = fresh_dir("cli_order");
  const std::string base = "align --embeddings " + toy("embeddings.txt") + " --story " +
                           toy("coast.json") + " --pool " + toy("pool.json") +
                           " --mode selective --budget 3 ";
  auto objective_of = [&](const std::string& extra, const std::string& dir) {
    EXPECT_EQ(run_cli(base + extra + " --out " + dir).exit_code, 0);
    const auto doc = nlohmann::json::parse(slurp(fs::path(dir) / "coast.alignment.json"));
    return doc["objective"].get<double>();
  };
  const double exact = objective_of("--solver exact", (out / "exact").string());
  const double greedy = objective_of("--solver greedy", (out / "greedy").string());
  double random_sum = 0.0;
  const int samples = 8;
  for (int seed = 0; seed < samples; ++seed) {
    random_sum += objective_of("--solver random --seed " + std::to_string(seed),
                               (out / ("random" + std::to_string(seed))).string());
  }
  EXPECT_GE(exact, greedy - 1e-12);
  EXPECT_GE(exact, random_sum / samples - 1e-12);
  EXPECT_GE(greedy, random_sum / samples - 1e-9);
}

TEST(CliEvaluate, PerfectAlignmentScoresAllOnes) {
  const auto out = fresh_dir("cli_eval");
  ASSERT_EQ(run_cli(align_args(out)).exit_code, 0);
  auto result = run_cli("evaluate --embeddings " + toy("embeddings.txt") + " --story " +
                        toy("coast.json") + " --corpus-story " + toy("peaks.json") +
                        " --corpus-story " + toy("city.json") + " --pool " + toy("pool.json") +
                        " --alignment " + (out / "coast.alignment.json").string() +
                        " --label exact --out " + out.string());
  ASSERT_EQ(result.exit_code, 0) << result.output;

  const auto report = nlohmann::json::parse(slurp(out / "coast.report.json"));
  for (const std::string metric : {"bleu", "rouge", "sem_sim", "para_rank",
                                   "order_preserve", "strict_precision",
                                   "relaxed_precision"}) {
    ASSERT_TRUE(report["metrics"].contains(metric)) << metric;
    EXPECT_NEAR(report["metrics"][metric].get<double>(), 1.0, 1e-9) << metric;
  }
  const auto csv = slurp(out / "coast.report.csv");
  EXPECT_NE(csv.find("method,BLEU,ROUGE,SemSim,ParaRank,OrderPreserve"), std::string::npos);
  EXPECT_NE(csv.find("exact,100.00,100.00,100.00,100.00,100.00"), std::string::npos);
}

TEST(CliEvaluate, MissingGroundTruthErrors) {
  const auto out = fresh_dir("cli_eval_nogt");
  const fs::path story = out / "plain.json";
  {
    std::ofstream s(story);
    s << R"({"id": "plain", "paragraphs": ["beach", "harbor"]})";
  }
  const fs::path alignment = out / "alignment.json";
  {
    std::ofstream a(alignment);
    a << R"({"assignments": {"img_beach": 0}, "objective": 0.5})";
  }
  auto result = run_cli("evaluate --embeddings " + toy("embeddings.txt") + " --story " +
                        story.string() + " --pool " + toy("pool.json") + " --alignment " +
                        alignment.string() + " --out " + out.string());
  EXPECT_EQ(result.exit_code, 1);
}

TEST(CliEmit, ImageBeforeParagraphAndRoundTrip) {
  const auto out = fresh_dir("cli_emit");
  ASSERT_EQ(run_cli(align_args(out)).exit_code, 0);
  auto result = run_cli("emit --story " + toy("coast.json") + " --pool " + toy("pool.json") +
                        " --alignment " + (out / "coast.alignment.json").string() +
                        " --images photos --out " + (out / "coast.md").string() +
                        " --html " + (out / "coast.html").string());
  ASSERT_EQ(result.exit_code, 0) << result.output;

  const auto story_doc = nlohmann::json::parse(slurp(toy("coast.json")));
  const auto markdown = slurp(out / "coast.md");

  std::vector<std::string> blocks;
  std::string block;
  std::istringstream in(markdown);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      if (!block.empty()) blocks.push_back(block);
      block.clear();
    } else {
      block += line;
    }
  }
  if (!block.empty()) blocks.push_back(block);

  std::vector<std::string> paragraphs;
  int images = 0;
  for (const auto& b : blocks) {
    if (b.rfind("![", 0) == 0) {
      ++images;
    } else {
      paragraphs.push_back(b);
    }
  }
  EXPECT_EQ(images, 3);
  ASSERT_EQ(paragraphs.size(), story_doc["paragraphs"].size());
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    EXPECT_EQ(paragraphs[i], story_doc["paragraphs"][i].get<std::string>());
  }
  EXPECT_TRUE(fs::exists(out / "coast.html"));
}

TEST(CliSensitivity, RanksWholeDatasetDeterministically) {
  auto first = run_cli("sensitivity --embeddings " + toy("embeddings.txt") + " --dataset " +
                       toy("dataset") + " --top 10");
  ASSERT_EQ(first.exit_code, 0) << first.output;
  std::istringstream in(first.output);
  std::string line;
  std::vector<std::string> ids;
  double previous = 1e9;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    int rank;
    std::string id;
    double score;
    ASSERT_TRUE(fields >> rank >> id >> score) << line;
    EXPECT_EQ(rank, static_cast<int>(ids.size()) + 1);
    EXPECT_LE(score, previous);
    previous = score;
    ids.push_back(id);
  }
  EXPECT_EQ(ids.size(), 3u);  // k larger than the dataset lists everything

  auto second = run_cli("sensitivity --embeddings " + toy("embeddings.txt") + " --dataset " +
                        toy("dataset") + " --top 10");
  EXPECT_EQ(first.output, second.output);

  auto top_one = run_cli("sensitivity --embeddings " + toy("embeddings.txt") + " --dataset " +
                         toy("dataset") + " --top 1");
  EXPECT_EQ(top_one.output.find(ids[0]) != std::string::npos, true);
  EXPECT_EQ(top_one.output.find(ids[2]), std::string::npos);
}

}  // namespace
