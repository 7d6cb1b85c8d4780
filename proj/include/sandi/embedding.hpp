#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sandi/errors.hpp"

namespace sandi {

using Vector = std::vector<double>;

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

/**
 * Immutable token -> vector store backed by a text embedding file
 * ("<count> <dim>" header, then one token and <dim> numbers per line).
 * Tokens are lowercased at load and lookup. All cosine math in the
 * pipeline flows through vectors obtained here.
 */
class EmbeddingStore {
 public:
  static EmbeddingStore load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path);

    std::string line;
    if (!std::getline(in, line)) {
      throw DataError("embedding file is empty: " + path);
    }
    std::istringstream header(line);
    long long count = 0, dim = 0;
    if (!(header >> count >> dim) || count < 0 || dim < 0) {
      throw DataError("malformed embedding header (expected '<count> <dim>'): " + line);
    }
    if (dim == 0) throw DataError("embedding dimension is 0");

    EmbeddingStore store;
    store.dimension_ = static_cast<std::size_t>(dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string token;
      if (!(row >> token)) continue;  // whitespace-only line
      Vector vec(store.dimension_);
      for (std::size_t i = 0; i < store.dimension_; ++i) {
        if (!(row >> vec[i]) || !std::isfinite(vec[i])) {
          throw DataError("embedding line " + std::to_string(line_no) +
                          ": expected " + std::to_string(dim) +
                          " finite values after token");
        }
      }
      std::string extra;
      if (row >> extra) {
        throw DataError("embedding line " + std::to_string(line_no) +
                        ": trailing fields beyond dimension " + std::to_string(dim));
      }
      // Duplicate tokens: last occurrence wins.
      store.entries_[to_lower(token)] = std::move(vec);
    }
    return store;
  }

  // Builds a store directly from entries; tokens are lowercased.
  static EmbeddingStore from_entries(
      std::size_t dimension,
      const std::vector<std::pair<std::string, Vector>>& entries) {
    if (dimension == 0) throw UsageError("embedding dimension must be positive");
    EmbeddingStore store;
    store.dimension_ = dimension;
    for (const auto& [token, vec] : entries) {
      if (vec.size() != dimension) {
        throw UsageError("entry '" + token + "' has wrong dimension");
      }
      store.entries_[to_lower(token)] = vec;
    }
    return store;
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  // Returns nullptr when the token is absent; never a default vector.
  const Vector* lookup(std::string_view token) const {
    auto it = entries_.find(to_lower(token));
    return it == entries_.end() ? nullptr : &it->second;
  }

 private:
  EmbeddingStore() = default;

  std::size_t dimension_ = 0;
  std::unordered_map<std::string, Vector> entries_;
};

/// Cosine similarity, clamped to [-1, 1]. Zero-norm input yields 0.
inline double cosine(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw UsageError("cosine: dimension mismatch (" + std::to_string(u.size()) +
                     " vs " + std::to_string(v.size()) + ")");
  }
  if (u == v) {
    double norm = 0.0;
    for (double x : u) norm += x * x;
    return norm == 0.0 ? 0.0 : 1.0;
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

/**
 * Vector for a unigram or bigram. Bigrams resolve to the underscore-joined
 * token when the store has it, else to the mean of the known constituents.
 * Returns nullopt when nothing resolves.
 */
inline std::optional<Vector> phrase_vector(const std::vector<std::string>& tokens,
                                           const EmbeddingStore& store) {
  if (tokens.empty() || tokens.size() > 2) {
    throw UsageError("phrase_vector: expected 1 or 2 tokens, got " +
                     std::to_string(tokens.size()));
  }
  if (tokens.size() == 1) {
    const Vector* v = store.lookup(tokens[0]);
    if (!v) return std::nullopt;
    return *v;
  }
  if (const Vector* joined = store.lookup(tokens[0] + "_" + tokens[1])) {
    return *joined;
  }
  const Vector* a = store.lookup(tokens[0]);
  const Vector* b = store.lookup(tokens[1]);
  if (!a && !b) return std::nullopt;
  if (a && b) {
    Vector mean(store.dimension());
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = ((*a)[i] + (*b)[i]) / 2.0;
    return mean;
  }
  return a ? *a : *b;
}

// Splits a term on spaces into its 1 or 2 tokens ("new york" -> {new, york}).
inline std::vector<std::string> term_tokens(std::string_view term) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(term)};
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

/**
 * Component-wise mean of phrase_vector over every term that resolves.
 * Multiset semantics: duplicate terms count once per occurrence.
 * Returns nullopt when no term resolves.
 */
inline std::optional<Vector> mean_vector(const std::vector<std::string>& terms,
                                         const EmbeddingStore& store) {
  Vector sum(store.dimension(), 0.0);
  std::size_t known = 0;
  for (const auto& term : terms) {
    auto tokens = term_tokens(term);
    if (tokens.empty() || tokens.size() > 2) continue;  // not a unigram/bigram
    auto vec = phrase_vector(tokens, store);
    if (!vec) continue;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*vec)[i];
    ++known;
  }
  if (known == 0) return std::nullopt;
  for (double& x : sum) x /= static_cast<double>(known);
  return sum;
}

}  // namespace sandi
