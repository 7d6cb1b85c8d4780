#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "sandi/errors.hpp"
#include "sandi/stopwords.hpp"

namespace sandi {

// One text unit of a story. `concepts` holds the TF-IDF top half of the
// paragraph's candidate terms, in rank order.
struct Paragraph {
  int index = 0;
  std::string text;
  std::vector<std::string> concepts;
};

struct Story {
  std::string id;
  std::vector<Paragraph> paragraphs;
  // Ground truth: image id -> index of the paragraph that followed the
  // image in the source document. At most one image per paragraph.
  std::map<std::string, int> ground_truth;

  bool has_ground_truth() const { return !ground_truth.empty(); }
};

// Document frequencies over every paragraph of the dataset.
struct CorpusStats {
  std::size_t paragraph_count = 0;
  std::unordered_map<std::string, std::size_t> document_frequency;
};

// Lowercase, split on non-alphanumeric, keep everything. Surface tokens
// for the n-gram overlap metrics.
inline std::vector<std::string> tokenize_raw(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

inline bool is_pure_number(std::string_view token) {
  return !token.empty() &&
         std::all_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

// Content tokens: raw tokens minus stopwords and pure numbers, in order.
inline std::vector<std::string> tokenize(std::string_view text,
                                         const StopwordSet& stopwords = default_stopwords()) {
  std::vector<std::string> tokens;
  for (auto& tok : tokenize_raw(text)) {
    if (is_pure_number(tok) || stopwords.count(tok)) continue;
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

// All unigrams plus all adjacent-pair bigrams ("w1 w2"), as a bag.
inline std::vector<std::string> candidate_terms(const std::vector<std::string>& tokens) {
  std::vector<std::string> terms;
  terms.reserve(tokens.size() * 2);
  for (const auto& tok : tokens) terms.push_back(tok);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    terms.push_back(tokens[i] + " " + tokens[i + 1]);
  }
  return terms;
}

// df counts paragraphs (not occurrences) containing each candidate term.
inline CorpusStats build_stats(const std::vector<const Story*>& stories,
                               const StopwordSet& stopwords = default_stopwords()) {
  CorpusStats stats;
  for (const Story* story : stories) {
    for (const Paragraph& p : story->paragraphs) {
      ++stats.paragraph_count;
      auto terms = candidate_terms(tokenize(p.text, stopwords));
      std::unordered_set<std::string> distinct(terms.begin(), terms.end());
      for (const auto& term : distinct) ++stats.document_frequency[term];
    }
  }
  if (stats.paragraph_count == 0) {
    throw UsageError("build_stats: dataset has no paragraphs");
  }
  return stats;
}

inline CorpusStats build_stats(const std::vector<Story>& stories,
                               const StopwordSet& stopwords = default_stopwords()) {
  std::vector<const Story*> ptrs;
  ptrs.reserve(stories.size());
  for (const Story& s : stories) ptrs.push_back(&s);
  return build_stats(ptrs, stopwords);
}

/**
 * TF-IDF concept extraction: score each distinct candidate term by
 * tf * ln(N / df), keep the top half (ceil) of the distinct terms.
 * Ties at the cutoff go to the lexicographically smaller term.
 * Terms unseen by the stats are given df = 1.
 */
inline std::vector<std::string> extract_concepts(const Paragraph& paragraph,
                                                 const CorpusStats& stats,
                                                 const StopwordSet& stopwords = default_stopwords()) {
  auto terms = candidate_terms(tokenize(paragraph.text, stopwords));
  if (terms.empty()) return {};

  std::map<std::string, std::size_t> tf;  // ordered: deterministic iteration
  for (const auto& term : terms) ++tf[term];

  struct Scored {
    double score;
    const std::string* term;
  };
  std::vector<Scored> scored;
  scored.reserve(tf.size());
  const double n = static_cast<double>(stats.paragraph_count);
  for (const auto& [term, count] : tf) {
    auto it = stats.document_frequency.find(term);
    const double df = it == stats.document_frequency.end()
                          ? 1.0
                          : static_cast<double>(it->second);
    scored.push_back({static_cast<double>(count) * std::log(n / df), &term});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return *a.term < *b.term;
  });

  const std::size_t keep = (scored.size() + 1) / 2;
  std::vector<std::string> concepts;
  concepts.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) concepts.push_back(*scored[i].term);
  return concepts;
}

// Fills paragraph.concepts for every paragraph of the story.
inline void annotate_concepts(Story& story, const CorpusStats& stats,
                              const StopwordSet& stopwords = default_stopwords()) {
  for (Paragraph& p : story.paragraphs) {
    p.concepts = extract_concepts(p, stats, stopwords);
  }
}

/**
 * Story JSON:
 *   { "id": str, "paragraphs": [str, ...],
 *     "ground_truth": {image_id: paragraph_index, ...}? }
 */
inline Story load_story(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open story file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("story " + path + ": invalid JSON: " + e.what());
  }

  if (!doc.is_object()) throw DataError("story $: expected object");
  if (!doc.contains("id") || !doc["id"].is_string()) {
    throw DataError("story $.id: expected string");
  }
  if (!doc.contains("paragraphs") || !doc["paragraphs"].is_array()) {
    throw DataError("story $.paragraphs: expected array of strings");
  }

  Story story;
  story.id = doc["id"].get<std::string>();
  int index = 0;
  for (const auto& entry : doc["paragraphs"]) {
    if (!entry.is_string()) {
      throw DataError("story $.paragraphs[" + std::to_string(index) +
                      "]: expected string");
    }
    story.paragraphs.push_back({index, entry.get<std::string>(), {}});
    ++index;
  }

  if (doc.contains("ground_truth")) {
    const auto& gt = doc["ground_truth"];
    if (!gt.is_object()) throw DataError("story $.ground_truth: expected object");
    std::unordered_set<int> used;
    for (const auto& [image_id, value] : gt.items()) {
      if (!value.is_number_integer()) {
        throw DataError("story $.ground_truth." + image_id + ": expected integer");
      }
      const int para = value.get<int>();
      if (para < 0 || para >= static_cast<int>(story.paragraphs.size())) {
        throw DataError("story $.ground_truth." + image_id + ": paragraph index " +
                        std::to_string(para) + " out of range [0, " +
                        std::to_string(story.paragraphs.size()) + ")");
      }
      if (!used.insert(para).second) {
        throw DataError("story $.ground_truth: paragraph " + std::to_string(para) +
                        " is assigned more than one image");
      }
      story.ground_truth[image_id] = para;
    }
  }
  return story;
}

}  // namespace sandi
