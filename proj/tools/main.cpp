// Command-line front end: ingestion -> enrichment -> similarity -> solve ->
// evaluate -> emit.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sandi/sandi.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInfeasible = 3;

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw sandi::DataError("cannot write " + path.string());
  out << contents;
}

std::string format_score(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

struct CommonOptions {
  std::string embeddings;
  std::string stopwords_path;
  std::string sources = "cv,man,bd,csk";

  sandi::StopwordSet stopwords() const {
    return stopwords_path.empty() ? sandi::default_stopwords()
                                  : sandi::load_stopwords(stopwords_path);
  }
};

struct AlignOptions {
  CommonOptions common;
  std::vector<std::string> stories;
  std::string pool;
  std::string mode = "complete";
  std::optional<int> budget;
  std::string solver = "exact";
  std::uint64_t seed = 0;
  double tau = 0.5;
  std::string assertions;
  std::string snippets;
  std::string out = ".";
};

int run_align(const AlignOptions& opt) {
  if (opt.mode == "selective" && !opt.budget) {
    throw sandi::UsageError("selective mode requires --budget");
  }
  const auto stopwords = opt.common.stopwords();
  const auto sources = sandi::SourceSet::parse(opt.common.sources);
  const auto store = sandi::EmbeddingStore::load(opt.common.embeddings);

  std::vector<sandi::Story> stories;
  for (const auto& path : opt.stories) stories.push_back(sandi::load_story(path));
  auto pool = sandi::load_pool(opt.pool);

  if (!opt.assertions.empty() || !opt.snippets.empty()) {
    if (opt.assertions.empty() || opt.snippets.empty()) {
      throw sandi::UsageError("--assertions and --snippets must be given together");
    }
    const auto assertions = sandi::load_assertions(opt.assertions);
    const auto snippet_sets = sandi::load_snippets(opt.snippets);
    sandi::apply_csk_enrichment(pool, assertions, snippet_sets, store, opt.tau, stopwords);
  }

  const auto stats = sandi::build_stats(stories, stopwords);
  for (auto& story : stories) sandi::annotate_concepts(story, stats, stopwords);

  for (const auto& story : stories) {
    // Complete mode places a story's own album; selective mode draws from
    // the whole pool.
    const sandi::ImagePool story_pool =
        opt.mode == "complete" ? pool.for_story(story.id) : pool;
    if (story_pool.images.empty()) {
      throw sandi::DataError("no pool images available for story '" + story.id + "'");
    }
    const auto matrix = sandi::build_matrix(story_pool, story, store, sources);

    std::optional<sandi::Budget> budget;
    if (opt.mode == "selective") budget = sandi::Budget(*opt.budget);

    sandi::Alignment alignment;
    if (opt.solver == "exact") {
      alignment = budget ? sandi::selective_align(matrix, *budget)
                         : sandi::complete_align(matrix);
    } else if (opt.solver == "greedy") {
      alignment = sandi::greedy_align(matrix, budget);
    } else if (opt.solver == "random") {
      alignment = sandi::random_align(matrix, budget, opt.seed);
    } else if (opt.solver == "oracle") {
      alignment = sandi::brute_force_align(matrix, budget);
    } else {
      throw sandi::UsageError("unknown solver '" + opt.solver + "'");
    }

    const fs::path out_dir(opt.out);
    write_file(out_dir / (story.id + ".alignment.json"),
               sandi::alignment_to_json(alignment).dump(2) + "\n");
    write_file(out_dir / (story.id + ".similarity.csv"), matrix.to_csv());
    std::cout << "story " << story.id << ": solver=" << opt.solver
              << " mode=" << opt.mode << " placed=" << alignment.assignments.size()
              << " objective=" << format_score(alignment.objective) << "\n";
  }
  return 0;
}

struct EvaluateOptions {
  CommonOptions common;
  std::string story;
  std::vector<std::string> corpus_stories;
  std::string pool;
  std::string alignment;
  std::string label = "sandi";
  std::string out = ".";
};

int run_evaluate(const EvaluateOptions& opt) {
  const auto stopwords = opt.common.stopwords();
  const auto sources = sandi::SourceSet::parse(opt.common.sources);
  const auto store = sandi::EmbeddingStore::load(opt.common.embeddings);

  std::vector<sandi::Story> stories;
  stories.push_back(sandi::load_story(opt.story));
  for (const auto& path : opt.corpus_stories) stories.push_back(sandi::load_story(path));
  const auto pool = sandi::load_pool(opt.pool);
  const auto alignment = sandi::load_alignment(opt.alignment);

  const auto stats = sandi::build_stats(stories, stopwords);
  for (auto& story : stories) sandi::annotate_concepts(story, stats, stopwords);
  const sandi::Story& story = stories.front();

  const auto report =
      sandi::evaluate_story(story, pool, alignment, store, sources, opt.label);
  const fs::path out_dir(opt.out);
  write_file(out_dir / (story.id + ".report.json"),
             sandi::report_to_json(report).dump(2) + "\n");
  write_file(out_dir / (story.id + ".report.csv"), sandi::reports_to_csv({report}));
  std::cout << "story " << story.id << ": method=" << report.method;
  for (const char* column : sandi::kReportColumns) {
    auto it = report.values.find(column);
    if (it == report.values.end()) continue;
    std::cout << " " << column << "=" << format_score(it->second);
  }
  std::cout << "\n";
  return 0;
}

struct EmitOptions {
  std::string story;
  std::string pool;
  std::string alignment;
  std::string images;
  std::string out;
  std::string html;
};

int run_emit(const EmitOptions& opt) {
  const auto story = sandi::load_story(opt.story);
  const auto pool = sandi::load_pool(opt.pool);
  const auto alignment = sandi::load_alignment(opt.alignment);

  const std::string out_path = opt.out.empty() ? story.id + ".md" : opt.out;
  write_file(out_path, sandi::render_markdown(story, alignment, pool, opt.images));
  std::cout << "wrote " << out_path << "\n";
  if (!opt.html.empty()) {
    write_file(opt.html, sandi::render_html(story, alignment, pool, opt.images));
    std::cout << "wrote " << opt.html << "\n";
  }
  return 0;
}

struct SensitivityOptions {
  CommonOptions common;
  std::string dataset;
  int top = 100;
};

int run_sensitivity(const SensitivityOptions& opt) {
  const auto stopwords = opt.common.stopwords();
  const auto store = sandi::EmbeddingStore::load(opt.common.embeddings);

  std::vector<std::pair<sandi::Story, sandi::ImagePool>> dataset;
  std::vector<fs::path> story_files;
  for (const auto& entry : fs::directory_iterator(opt.dataset)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 11 && name.substr(name.size() - 11) == ".story.json") {
      story_files.push_back(entry.path());
    }
  }
  std::sort(story_files.begin(), story_files.end());
  for (const auto& story_path : story_files) {
    auto stem = story_path.string();
    stem.resize(stem.size() - 11);
    const fs::path pool_path = stem + ".pool.json";
    if (!fs::exists(pool_path)) {
      throw sandi::DataError("missing pool file for " + story_path.string());
    }
    dataset.emplace_back(sandi::load_story(story_path.string()),
                         sandi::load_pool(pool_path.string()));
  }
  if (dataset.empty()) {
    throw sandi::DataError("no *.story.json files under " + opt.dataset);
  }

  std::vector<const sandi::Story*> all_stories;
  for (const auto& [story, pool] : dataset) all_stories.push_back(&story);
  const auto stats = sandi::build_stats(all_stories, stopwords);
  for (auto& [story, pool] : dataset) sandi::annotate_concepts(story, stats, stopwords);

  std::vector<std::pair<double, const sandi::Story*>> ranked;
  for (const auto& [story, pool] : dataset) {
    ranked.emplace_back(sandi::alignment_sensitivity(story, pool, store), &story);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->id < b.second->id;
  });

  const int limit = std::min<int>(opt.top, static_cast<int>(ranked.size()));
  for (int i = 0; i < limit; ++i) {
    std::cout << (i + 1) << "\t" << ranked[i].second->id << "\t"
              << format_score(ranked[i].first) << "\n";
  }
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& common, bool with_sources = true) {
  cmd->add_option("--embeddings", common.embeddings, "embedding text file")->required();
  cmd->add_option("--stopwords", common.stopwords_path,
                  "stopword list overriding the bundled one");
  if (with_sources) {
    cmd->add_option("--sources", common.sources, "tag sources, e.g. cv,man,bd,csk");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"story-images alignment"};
  app.require_subcommand(1);

  AlignOptions align;
  auto* align_cmd = app.add_subcommand("align", "score and place images");
  add_common(align_cmd, align.common);
  align_cmd->add_option("--story", align.stories, "story JSON (repeatable)")->required();
  align_cmd->add_option("--pool", align.pool, "image pool JSON")->required();
  align_cmd->add_option("--mode", align.mode, "complete|selective")
      ->check(CLI::IsMember({"complete", "selective"}));
  align_cmd->add_option("--budget", align.budget, "images to place (selective)");
  align_cmd->add_option("--solver", align.solver, "exact|greedy|random|oracle")
      ->check(CLI::IsMember({"exact", "greedy", "random", "oracle"}));
  align_cmd->add_option("--seed", align.seed, "seed for the random baseline");
  align_cmd->add_option("--tau", align.tau, "informativeness threshold");
  align_cmd->add_option("--assertions", align.assertions, "CSK assertions TSV");
  align_cmd->add_option("--snippets", align.snippets, "CSK snippets JSON");
  align_cmd->add_option("--out", align.out, "output directory");

  EvaluateOptions evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "score an alignment against ground truth");
  add_common(eval_cmd, evaluate.common);
  eval_cmd->add_option("--story", evaluate.story, "story JSON")->required();
  eval_cmd->add_option("--corpus-story", evaluate.corpus_stories,
                       "extra stories feeding the TF-IDF statistics");
  eval_cmd->add_option("--pool", evaluate.pool, "image pool JSON")->required();
  eval_cmd->add_option("--alignment", evaluate.alignment, "alignment JSON")->required();
  eval_cmd->add_option("--label", evaluate.label, "method label for the report");
  eval_cmd->add_option("--out", evaluate.out, "output directory");

  EmitOptions emit;
  auto* emit_cmd = app.add_subcommand("emit", "render the multimodal document");
  emit_cmd->add_option("--story", emit.story, "story JSON")->required();
  emit_cmd->add_option("--pool", emit.pool, "image pool JSON")->required();
  emit_cmd->add_option("--alignment", emit.alignment, "alignment JSON")->required();
  emit_cmd->add_option("--images", emit.images, "directory prefix for image sources");
  emit_cmd->add_option("--out", emit.out, "output Markdown file");
  emit_cmd->add_option("--html", emit.html, "also write an HTML version here");

  SensitivityOptions sensitivity;
  auto* sens_cmd = app.add_subcommand("sensitivity", "rank stories by alignment sensitivity");
  add_common(sens_cmd, sensitivity.common, /*with_sources=*/false);
  sens_cmd->add_option("--dataset", sensitivity.dataset,
                       "directory of <name>.story.json / <name>.pool.json pairs")
      ->required();
  sens_cmd->add_option("--top", sensitivity.top, "list the top-k stories");

  try {
    app.parse(argc, argv);
    if (align_cmd->parsed()) return run_align(align);
    if (eval_cmd->parsed()) return run_evaluate(evaluate);
    if (emit_cmd->parsed()) return run_emit(emit);
    if (sens_cmd->parsed()) return run_sensitivity(sensitivity);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      return app.exit(e);
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sandi::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sandi::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const sandi::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
