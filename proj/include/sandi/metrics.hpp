#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "sandi/corpus.hpp"
#include "sandi/descriptors.hpp"
#include "sandi/embedding.hpp"
#include "sandi/errors.hpp"
#include "sandi/solver.hpp"

namespace sandi {

// --- Image selection --------------------------------------------------------

// Fraction of selected images that are exact ground-truth matches.
inline double strict_precision(const std::set<std::string>& selected,
                               const std::set<std::string>& ground_truth) {
  if (selected.empty() || selected.size() != ground_truth.size()) {
    throw UsageError("strict_precision: selected and ground-truth sets must be "
                     "non-empty and equal-sized");
  }
  std::size_t hits = 0;
  for (const auto& id : selected) hits += ground_truth.count(id);
  return static_cast<double>(hits) / static_cast<double>(selected.size());
}

/**
 * Relaxed precision: mean over selected images of the best cosine match
 * against any ground-truth image, comparing mean tag vectors over the
 * chosen sources. Per-image contributions are floored at 0 so the score
 * stays in [0, 1] and never drops below strict precision; an image with
 * no resolvable tags contributes 0.
 */
inline double relaxed_precision(const std::vector<const ImageDescriptor*>& selected,
                                const std::vector<const ImageDescriptor*>& ground_truth,
                                const EmbeddingStore& store, SourceSet sources) {
  if (selected.empty() || selected.size() != ground_truth.size()) {
    throw UsageError("relaxed_precision: selected and ground-truth sets must be "
                     "non-empty and equal-sized");
  }
  std::vector<std::optional<Vector>> gt_vectors;
  gt_vectors.reserve(ground_truth.size());
  for (const ImageDescriptor* img : ground_truth) {
    gt_vectors.push_back(mean_vector(img->tags_union(sources), store));
  }
  double total = 0.0;
  for (const ImageDescriptor* img : selected) {
    auto vec = mean_vector(img->tags_union(sources), store);
    if (!vec) continue;
    double best = 0.0;
    for (const auto& gt_vec : gt_vectors) {
      if (!gt_vec) continue;
      best = std::max(best, cosine(*vec, *gt_vec));
    }
    total += best;
  }
  return total / static_cast<double>(selected.size());
}

// --- Image placement --------------------------------------------------------

// Cosine of the mean embeddings of the two paragraphs' concept bags.
inline double sem_sim(const Paragraph& a, const Paragraph& b, const EmbeddingStore& store) {
  auto va = mean_vector(a.concepts, store);
  if (!va) return 0.0;
  auto vb = mean_vector(b.concepts, store);
  if (!vb) return 0.0;
  return cosine(*va, *vb);
}

namespace detail {

// Rank of every paragraph by sem_sim to the anchor paragraph, descending;
// the anchor itself is rank 1, remaining ties break by paragraph index.
inline std::vector<int> paragraph_ranks(const Story& story, int anchor,
                                        const EmbeddingStore& store) {
  const int n = static_cast<int>(story.paragraphs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sims(n);
  for (int t = 0; t < n; ++t) {
    sims[t] = sem_sim(story.paragraphs[anchor], story.paragraphs[t], store);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if ((a == anchor) != (b == anchor)) return a == anchor;
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return a < b;
  });
  std::vector<int> rank(n);
  for (int pos = 0; pos < n; ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

}  // namespace detail

/**
 * ParaRank: normalized average rank of the aligned paragraphs in each
 * image's ground-truth similarity ranking. 1 is perfect (all rank 1),
 * 0 is worst (all at rank |T|).
 */
inline double para_rank(const Alignment& alignment, const std::map<std::string, int>& gt,
                        const Story& story, const EmbeddingStore& store) {
  const int n = static_cast<int>(story.paragraphs.size());
  if (n < 2) throw UsageError("para_rank: needs at least 2 paragraphs");
  if (alignment.assignments.empty()) throw UsageError("para_rank: empty alignment");

  std::unordered_map<int, std::vector<int>> rank_cache;
  double rank_sum = 0.0;
  for (const auto& [image_id, aligned] : alignment.assignments) {
    auto it = gt.find(image_id);
    if (it == gt.end()) {
      throw UsageError("para_rank: aligned image '" + image_id + "' has no ground truth");
    }
    auto [cache_it, fresh] = rank_cache.try_emplace(it->second);
    if (fresh) cache_it->second = detail::paragraph_ranks(story, it->second, store);
    rank_sum += cache_it->second[aligned];
  }
  const double mean_rank = rank_sum / static_cast<double>(alignment.assignments.size());
  return 1.0 - (mean_rank - 1.0) / static_cast<double>(n - 1);
}

/**
 * OrderPreserve: fraction of image pairs whose relative order (by
 * paragraph index) matches between ground truth and the produced
 * alignment. Both mappings must cover the same images.
 */
inline double order_preserve(const std::map<std::string, int>& produced,
                             const std::map<std::string, int>& gt) {
  if (produced.size() < 2) throw UsageError("order_preserve: needs at least 2 images");
  std::vector<std::pair<int, int>> pairs;  // (gt index, produced index) per image
  for (const auto& [image_id, gt_index] : gt) {
    auto it = produced.find(image_id);
    if (it == produced.end()) {
      throw UsageError("order_preserve: mappings cover different images ('" + image_id + "')");
    }
    pairs.emplace_back(gt_index, it->second);
  }
  if (pairs.size() != produced.size()) {
    throw UsageError("order_preserve: mappings cover different images");
  }
  std::size_t preserved = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      const auto& [gi, pi] = pairs[i];
      const auto& [gj, pj] = pairs[j];
      if ((gi < gj && pi < pj) || (gj < gi && pj < pi)) ++preserved;
    }
  }
  const std::size_t n = pairs.size();
  return static_cast<double>(preserved) / (static_cast<double>(n * (n - 1)) / 2.0);
}

// --- N-gram overlap ----------------------------------------------------------

namespace detail {

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(
    const std::vector<std::string>& tokens, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[{tokens.begin() + i, tokens.begin() + i + n}];
  }
  return counts;
}

}  // namespace detail

/**
 * Smoothed BLEU-4 of the aligned paragraph against the ground-truth
 * paragraph: add-one smoothed modified n-gram precisions up to 4-grams,
 * geometric mean, times the brevity penalty. Empty text scores 0.
 */
inline double bleu(const std::string& gt_text, const std::string& aligned_text) {
  const auto reference = tokenize_raw(gt_text);
  const auto candidate = tokenize_raw(aligned_text);
  if (reference.empty() || candidate.empty()) return 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand = detail::ngram_counts(candidate, n);
    const auto ref = detail::ngram_counts(reference, n);
    std::size_t matched = 0, total = 0;
    for (const auto& [gram, count] : cand) {
      auto it = ref.find(gram);
      matched += std::min(count, it == ref.end() ? 0 : it->second);
      total += count;
    }
    log_sum += std::log((static_cast<double>(matched) + 1.0) /
                        (static_cast<double>(total) + 1.0));
  }
  const double precision = std::exp(log_sum / 4.0);
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return brevity * precision;
}

// ROUGE-1 F1 between the ground-truth and aligned paragraphs.
inline double rouge(const std::string& gt_text, const std::string& aligned_text) {
  const auto reference = tokenize_raw(gt_text);
  const auto candidate = tokenize_raw(aligned_text);
  if (reference.empty() || candidate.empty()) return 0.0;

  std::unordered_map<std::string, std::size_t> ref_counts;
  for (const auto& tok : reference) ++ref_counts[tok];
  std::unordered_map<std::string, std::size_t> cand_counts;
  for (const auto& tok : candidate) ++cand_counts[tok];

  std::size_t overlap = 0;
  for (const auto& [tok, count] : cand_counts) {
    auto it = ref_counts.find(tok);
    if (it != ref_counts.end()) overlap += std::min(count, it->second);
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(candidate.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(reference.size());
  return 2.0 * precision * recall / (precision + recall);
}

// --- Reports ------------------------------------------------------------------

// Named metric values for one evaluation run. Values are on the raw [0, 1]
// scale; the CSV rendering multiplies by 100.
struct EvaluationReport {
  std::string method;
  std::size_t image_count = 0;
  std::size_t paragraph_count = 0;
  std::size_t placed_count = 0;
  std::map<std::string, double> values;

  void set(const std::string& name, double value) {
    if (!std::isfinite(value)) {
      throw UsageError("report value '" + name + "' is not finite");
    }
    values[name] = value;
  }

  bool has(const std::string& name) const { return values.count(name) > 0; }
};

inline constexpr const char* kReportColumns[] = {
    "bleu", "rouge", "sem_sim", "para_rank", "order_preserve",
    "strict_precision", "relaxed_precision"};

inline const char* report_column_label(const std::string& name) {
  if (name == "bleu") return "BLEU";
  if (name == "rouge") return "ROUGE";
  if (name == "sem_sim") return "SemSim";
  if (name == "para_rank") return "ParaRank";
  if (name == "order_preserve") return "OrderPreserve";
  if (name == "strict_precision") return "StrictPrecision";
  if (name == "relaxed_precision") return "RelaxedPrecision";
  return name.c_str();
}

/**
 * Placement and selection metrics for one story. Placement metrics are
 * computed over the aligned images that carry ground truth; selection
 * precisions are added when the selected and ground-truth sets have equal
 * size. OrderPreserve needs two or more scored images.
 */
inline EvaluationReport evaluate_story(const Story& story, const ImagePool& pool,
                                       const Alignment& alignment, const EmbeddingStore& store,
                                       SourceSet sources, const std::string& method) {
  if (!story.has_ground_truth()) {
    throw UsageError("evaluate: story '" + story.id + "' has no ground truth");
  }
  EvaluationReport report;
  report.method = method;
  report.image_count = pool.images.size();
  report.paragraph_count = story.paragraphs.size();
  report.placed_count = alignment.assignments.size();

  // Restriction to images that can be scored against ground truth.
  Alignment scored;
  std::map<std::string, int> scored_gt;
  for (const auto& [image_id, para] : alignment.assignments) {
    auto it = story.ground_truth.find(image_id);
    if (it == story.ground_truth.end()) continue;
    scored.assignments[image_id] = para;
    scored_gt[image_id] = it->second;
  }

  if (!scored.assignments.empty()) {
    double bleu_sum = 0.0, rouge_sum = 0.0, sem_sum = 0.0;
    for (const auto& [image_id, para] : scored.assignments) {
      const Paragraph& aligned = story.paragraphs[para];
      const Paragraph& gt_para = story.paragraphs[scored_gt[image_id]];
      bleu_sum += bleu(gt_para.text, aligned.text);
      rouge_sum += rouge(gt_para.text, aligned.text);
      sem_sum += sem_sim(gt_para, aligned, store);
    }
    const double count = static_cast<double>(scored.assignments.size());
    report.set("bleu", bleu_sum / count);
    report.set("rouge", rouge_sum / count);
    report.set("sem_sim", sem_sum / count);
    if (story.paragraphs.size() >= 2) {
      report.set("para_rank", para_rank(scored, scored_gt, story, store));
    }
    if (scored.assignments.size() >= 2) {
      report.set("order_preserve", order_preserve(scored.assignments, scored_gt));
    }
  }

  if (!alignment.assignments.empty() &&
      alignment.assignments.size() == story.ground_truth.size()) {
    std::set<std::string> selected, gt_ids;
    for (const auto& [id, _] : alignment.assignments) selected.insert(id);
    for (const auto& [id, _] : story.ground_truth) gt_ids.insert(id);
    report.set("strict_precision", strict_precision(selected, gt_ids));

    std::vector<const ImageDescriptor*> sel_imgs, gt_imgs;
    bool all_known = true;
    for (const auto& id : selected) {
      const ImageDescriptor* img = pool.find(id);
      if (!img) { all_known = false; break; }
      sel_imgs.push_back(img);
    }
    for (const auto& id : gt_ids) {
      const ImageDescriptor* img = pool.find(id);
      if (!img) { all_known = false; break; }
      gt_imgs.push_back(img);
    }
    if (all_known) {
      report.set("relaxed_precision", relaxed_precision(sel_imgs, gt_imgs, store, sources));
    }
  }
  return report;
}

// Dataset-level report: mean of each metric over the reports that carry
// it; counts are summed.
inline EvaluationReport aggregate_reports(const std::vector<EvaluationReport>& reports,
                                          const std::string& method) {
  if (reports.empty()) throw UsageError("aggregate_reports: no reports");
  EvaluationReport out;
  out.method = method;
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& report : reports) {
    out.image_count += report.image_count;
    out.paragraph_count += report.paragraph_count;
    out.placed_count += report.placed_count;
    for (const auto& [name, value] : report.values) {
      auto& [sum, n] = sums[name];
      sum += value;
      ++n;
    }
  }
  for (const auto& [name, agg] : sums) {
    out.set(name, agg.first / static_cast<double>(agg.second));
  }
  return out;
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [name, value] : report.values) metrics[name] = value;
  return nlohmann::json{
      {"method", report.method},
      {"counts",
       {{"images", report.image_count},
        {"paragraphs", report.paragraph_count},
        {"placed", report.placed_count}}},
      {"metrics", metrics}};
}

// One row per report, metric columns scaled by 100 (table convention).
inline std::string reports_to_csv(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  out << "method";
  for (const char* column : kReportColumns) out << ',' << report_column_label(column);
  out << '\n';
  for (const auto& report : reports) {
    out << report.method;
    for (const char* column : kReportColumns) {
      out << ',';
      auto it = report.values.find(column);
      if (it != report.values.end()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", it->second * 100.0);
        out << buf;
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace sandi
