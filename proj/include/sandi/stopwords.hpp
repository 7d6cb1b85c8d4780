#pragma once

#include <fstream>
#include <string>
#include <unordered_set>

#include "sandi/errors.hpp"

namespace sandi {

using StopwordSet = std::unordered_set<std::string>;

// Bundled default list (classic 127-word English stopword list).
inline const StopwordSet& default_stopwords() {
  static const StopwordSet words = {
      "i",       "me",      "my",       "myself", "we",      "our",
      "ours",    "ourselves", "you",    "your",   "yours",   "yourself",
      "yourselves", "he",   "him",      "his",    "himself", "she",
      "her",     "hers",    "herself",  "it",     "its",     "itself",
      "they",    "them",    "their",    "theirs", "themselves", "what",
      "which",   "who",     "whom",     "this",   "that",    "these",
      "those",   "am",      "is",       "are",    "was",     "were",
      "be",      "been",    "being",    "have",   "has",     "had",
      "having",  "do",      "does",     "did",    "doing",   "a",
      "an",      "the",     "and",      "but",    "if",      "or",
      "because", "as",      "until",    "while",  "of",      "at",
      "by",      "for",     "with",     "about",  "against", "between",
      "into",    "through", "during",   "before", "after",   "above",
      "below",   "to",      "from",     "up",     "down",    "in",
      "out",     "on",      "off",      "over",   "under",   "again",
      "further", "then",    "once",     "here",   "there",   "when",
      "where",   "why",     "how",      "all",    "any",     "both",
      "each",    "few",     "more",     "most",   "other",   "some",
      "such",    "no",      "nor",      "not",    "only",    "own",
      "same",    "so",      "than",     "too",    "very",    "s",
      "t",       "can",     "will",     "just",   "don",     "should",
      "now"};
  return words;
}

// One word per line; blank lines ignored. Words are lowercased.
inline StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file: " + path);
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::string word;
    for (char c : line) word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.insert(word);
  }
  return words;
}

}  // namespace sandi
