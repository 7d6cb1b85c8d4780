#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sandi/errors.hpp"
#include "sandi/similarity.hpp"

namespace sandi {

// Required number of placed images in selective mode.
struct Budget {
  int value;
  explicit Budget(int b) : value(b) {
    if (b <= 0) throw UsageError("budget must be a positive integer");
  }
};

// Injective partial mapping image id -> paragraph index, plus the sum of
// matrix scores over the assigned pairs.
struct Alignment {
  std::map<std::string, int> assignments;
  double objective = 0.0;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr int kUnassigned = -1;

// Canonical objective: direct sum of matrix scores in image-row order.
// Every solver and the oracle report objectives through this one function,
// so equal assignments always compare bit-identically.
inline double objective_of(const SimilarityMatrix& m, const std::vector<int>& row_to_col) {
  double total = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r) {
    if (row_to_col[r] != kUnassigned) total += m.at(r, static_cast<std::size_t>(row_to_col[r]));
  }
  return total;
}

// Lexicographic order on assignment vectors; unassigned sorts after every
// paragraph index.
inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int av = a[i] == kUnassigned ? std::numeric_limits<int>::max() : a[i];
    const int bv = b[i] == kUnassigned ? std::numeric_limits<int>::max() : b[i];
    if (av != bv) return av < bv;
  }
  return false;
}

struct MatchResult {
  std::vector<int> row_to_col;        // local row -> local col, -1 unmatched
  std::vector<double> row_potential;  // dual values certifying optimality
  std::vector<double> col_potential;
};

/**
 * Min-cost bipartite matching of exactly `k` pairs by successive shortest
 * paths, over cost(r, c) = -score. After each augmentation the matching is
 * a minimum-cost matching of its cardinality, so stopping after k steps
 * solves the fixed-cardinality problem; k = #rows is the complete case.
 *
 * Potentials keep reduced costs non-negative so each step is one Dijkstra
 * pass (dense, multi-source from the unmatched rows).
 */
inline MatchResult min_cost_match(const SimilarityMatrix& m, const std::vector<int>& rows,
                                  const std::vector<int>& cols, int k) {
  const int nr = static_cast<int>(rows.size());
  const int nc = static_cast<int>(cols.size());
  MatchResult res;
  res.row_to_col.assign(nr, kUnassigned);
  res.row_potential.assign(nr, 0.0);
  res.col_potential.assign(nc, 0.0);
  if (k == 0) return res;

  auto cost = [&](int r, int c) {
    return -m.at(static_cast<std::size_t>(rows[r]), static_cast<std::size_t>(cols[c]));
  };

  std::vector<int> match_col(nc, kUnassigned);
  auto& match_row = res.row_to_col;
  auto& pi_row = res.row_potential;
  auto& pi_col = res.col_potential;

  // Uniform initial column potential: the global cost minimum. Keeps every
  // reduced cost non-negative (costs may be negative) while leaving all
  // unmatched nodes at equal potential, which "first settled unmatched
  // column" target selection requires. The update rule preserves that
  // equality: non-target unmatched columns are never settled, so each
  // augmentation shifts them all by the same amount.
  double floor_cost = 0.0;
  for (int c = 0; c < nc; ++c) {
    for (int r = 0; r < nr; ++r) floor_cost = std::min(floor_cost, cost(r, c));
  }
  std::fill(pi_col.begin(), pi_col.end(), floor_cost);

  std::vector<double> dist_row(nr), dist_col(nc);
  std::vector<bool> done_row(nr), done_col(nc);
  std::vector<int> parent_col(nc);

  for (int aug = 0; aug < k; ++aug) {
    std::fill(dist_row.begin(), dist_row.end(), kInf);
    std::fill(dist_col.begin(), dist_col.end(), kInf);
    std::fill(done_row.begin(), done_row.end(), false);
    std::fill(done_col.begin(), done_col.end(), false);
    std::fill(parent_col.begin(), parent_col.end(), kUnassigned);
    for (int r = 0; r < nr; ++r) {
      if (match_row[r] == kUnassigned) dist_row[r] = 0.0;  // sources
    }

    int target = kUnassigned;
    while (true) {
      // Dense selection of the nearest unvisited node (row or column).
      double best = kInf;
      int idx = kUnassigned;
      bool is_col = false;
      for (int r = 0; r < nr; ++r) {
        if (!done_row[r] && dist_row[r] < best) { best = dist_row[r]; idx = r; is_col = false; }
      }
      for (int c = 0; c < nc; ++c) {
        if (!done_col[c] && dist_col[c] < best) { best = dist_col[c]; idx = c; is_col = true; }
      }
      if (idx == kUnassigned) break;  // nothing reachable

      if (is_col) {
        const int c = idx;
        done_col[c] = true;
        if (match_col[c] == kUnassigned) { target = c; break; }
        // Matched edges are tight: traverse back to the row for free.
        const int r = match_col[c];
        if (dist_col[c] < dist_row[r]) dist_row[r] = dist_col[c];
      } else {
        const int r = idx;
        done_row[r] = true;
        for (int c = 0; c < nc; ++c) {
          if (done_col[c] || match_row[r] == c) continue;
          const double nd = dist_row[r] + cost(r, c) + pi_row[r] - pi_col[c];
          if (nd < dist_col[c]) { dist_col[c] = nd; parent_col[c] = r; }
        }
      }
    }
    if (target == kUnassigned) {
      throw InfeasibleError("matching: no augmenting path (cardinality " +
                            std::to_string(k) + " infeasible)");
    }

    const double limit = dist_col[target];
    for (int r = 0; r < nr; ++r) pi_row[r] += std::min(dist_row[r], limit);
    for (int c = 0; c < nc; ++c) pi_col[c] += std::min(dist_col[c], limit);

    for (int c = target; c != kUnassigned;) {
      const int r = parent_col[c];
      const int prev = match_row[r];
      match_row[r] = c;
      match_col[c] = r;
      c = prev;
    }
  }
  return res;
}

/**
 * Exact solve plus lexicographic tie refinement. Fixes rows in index
 * order; for each row it adopts the smallest paragraph index that still
 * admits a completion reaching the optimal objective, verified by
 * re-solving the remainder. Candidates are pruned by reduced cost: with
 * valid potentials, forcing an edge of reduced cost rc > 0 into the
 * solution lowers the objective by at least rc, so only tight edges can
 * participate in a co-optimal solution.
 */
inline std::vector<int> solve_lex_min(const SimilarityMatrix& m, int k) {
  const int nr = static_cast<int>(m.rows());
  const int nc = static_cast<int>(m.cols());

  std::vector<int> all_rows(nr), all_cols(nc);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::iota(all_cols.begin(), all_cols.end(), 0);

  MatchResult full = min_cost_match(m, all_rows, all_cols, k);
  std::vector<int> current(nr, kUnassigned);
  for (int r = 0; r < nr; ++r) {
    if (full.row_to_col[r] != kUnassigned) current[r] = all_cols[full.row_to_col[r]];
  }
  const double opt = objective_of(m, current);

  // Global potentials for the not-yet-fixed subproblem.
  std::vector<double> pi_row(full.row_potential), pi_col(full.col_potential);
  std::vector<bool> col_used(nc, false);
  int budget_left = k;

  for (int i = 0; i < nr && budget_left > 0; ++i) {
    const int target = current[i];
    const int limit = target == kUnassigned ? nc : target;
    for (int c = 0; c < limit; ++c) {
      if (col_used[c]) continue;
      const double reduced = -m.at(i, c) + pi_row[i] - pi_col[c];
      if (reduced > 1e-12) continue;

      std::vector<int> sub_rows, sub_cols;
      for (int r = i + 1; r < nr; ++r) sub_rows.push_back(r);
      for (int cc = 0; cc < nc; ++cc) {
        if (!col_used[cc] && cc != c) sub_cols.push_back(cc);
      }
      MatchResult sub = min_cost_match(m, sub_rows, sub_cols, budget_left - 1);

      std::vector<int> candidate(current.begin(), current.begin() + i);
      candidate.resize(nr, kUnassigned);
      candidate[i] = c;
      for (std::size_t r = 0; r < sub_rows.size(); ++r) {
        if (sub.row_to_col[r] != kUnassigned) {
          candidate[sub_rows[r]] = sub_cols[sub.row_to_col[r]];
        }
      }
      if (objective_of(m, candidate) == opt) {
        current = candidate;
        for (std::size_t r = 0; r < sub_rows.size(); ++r) pi_row[sub_rows[r]] = sub.row_potential[r];
        for (std::size_t cc = 0; cc < sub_cols.size(); ++cc) pi_col[sub_cols[cc]] = sub.col_potential[cc];
        break;
      }
    }
    if (current[i] != kUnassigned) {
      col_used[current[i]] = true;
      --budget_left;
    }
  }
  return current;
}

inline Alignment wrap(const SimilarityMatrix& m, const std::vector<int>& row_to_col) {
  Alignment out;
  for (std::size_t r = 0; r < row_to_col.size(); ++r) {
    if (row_to_col[r] != kUnassigned) out.assignments[m.image_ids()[r]] = row_to_col[r];
  }
  out.objective = objective_of(m, row_to_col);
  return out;
}

inline void check_selective(const SimilarityMatrix& m, Budget budget) {
  const int cap = static_cast<int>(std::min(m.rows(), m.cols()));
  if (budget.value > cap) {
    throw UsageError("budget " + std::to_string(budget.value) + " exceeds min(|I|, |T|) = " +
                     std::to_string(cap));
  }
}

inline void check_complete(const SimilarityMatrix& m) {
  if (m.rows() > m.cols()) {
    throw InfeasibleError("complete alignment infeasible: " + std::to_string(m.rows()) +
                          " images > " + std::to_string(m.cols()) + " paragraphs");
  }
}

// Bounded draw; modulo bias is negligible for the pool sizes involved.
inline std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

}  // namespace detail

/**
 * Complete alignment: place every image, one per paragraph at most, with
 * maximum total relatedness. Among co-optimal solutions returns the
 * lexicographically smallest assignment vector.
 */
inline Alignment complete_align(const SimilarityMatrix& matrix) {
  detail::check_complete(matrix);
  return detail::wrap(matrix, detail::solve_lex_min(matrix, static_cast<int>(matrix.rows())));
}

/**
 * Selective alignment: place exactly `budget` images from the pool; image
 * and paragraph each used at most once; total relatedness maximal. Same
 * lexicographic tie rule, with unplaced images sorting last.
 */
inline Alignment selective_align(const SimilarityMatrix& matrix, Budget budget) {
  detail::check_selective(matrix, budget);
  return detail::wrap(matrix, detail::solve_lex_min(matrix, budget.value));
}

/**
 * Exhaustive-enumeration oracle for both modes, sizes capped at 8x8.
 * Shares the objective function and tie rule with the main solvers.
 */
inline Alignment brute_force_align(const SimilarityMatrix& matrix,
                                   std::optional<Budget> budget = std::nullopt) {
  if (matrix.rows() > 8 || matrix.cols() > 8) {
    throw UsageError("brute force guard: instance larger than 8x8");
  }
  if (budget) {
    detail::check_selective(matrix, *budget);
  } else {
    detail::check_complete(matrix);
  }
  const int nr = static_cast<int>(matrix.rows());
  const int nc = static_cast<int>(matrix.cols());
  const int need = budget ? budget->value : nr;

  std::vector<int> assignment(nr, detail::kUnassigned);
  std::vector<bool> col_used(nc, false);
  std::vector<int> best;
  double best_objective = -detail::kInf;

  auto consider = [&]() {
    const double objective = detail::objective_of(matrix, assignment);
    if (best.empty() || objective > best_objective ||
        (objective == best_objective && detail::lex_less(assignment, best))) {
      best = assignment;
      best_objective = objective;
    }
  };

  auto visit = [&](auto&& self, int row, int placed) -> void {
    if (row == nr) {
      if (placed == need) consider();
      return;
    }
    if (placed + (nr - row) < need) return;  // cannot reach the budget
    for (int c = 0; c < nc; ++c) {
      if (col_used[c]) continue;
      col_used[c] = true;
      assignment[row] = c;
      self(self, row + 1, placed + 1);
      assignment[row] = detail::kUnassigned;
      col_used[c] = false;
    }
    if (budget) self(self, row + 1, placed);  // selective mode may skip an image
  };
  visit(visit, 0, 0);
  return detail::wrap(matrix, best);
}

/**
 * Nearest-neighbor baseline: repeatedly take the highest-scoring free
 * (image, paragraph) pair (ties: lowest image index, then paragraph
 * index) until every image (complete) or `budget` pairs (selective) are
 * placed.
 */
inline Alignment greedy_align(const SimilarityMatrix& matrix,
                              std::optional<Budget> budget = std::nullopt) {
  if (budget) {
    detail::check_selective(matrix, *budget);
  } else {
    detail::check_complete(matrix);
  }
  const int nr = static_cast<int>(matrix.rows());
  const int nc = static_cast<int>(matrix.cols());
  const int need = budget ? budget->value : nr;

  std::vector<int> assignment(nr, detail::kUnassigned);
  std::vector<bool> row_used(nr, false), col_used(nc, false);
  for (int step = 0; step < need; ++step) {
    double best = -detail::kInf;
    int best_r = detail::kUnassigned, best_c = detail::kUnassigned;
    for (int r = 0; r < nr; ++r) {
      if (row_used[r]) continue;
      for (int c = 0; c < nc; ++c) {
        if (col_used[c]) continue;
        if (matrix.at(r, c) > best) {
          best = matrix.at(r, c);
          best_r = r;
          best_c = c;
        }
      }
    }
    row_used[best_r] = true;
    col_used[best_c] = true;
    assignment[best_r] = best_c;
  }
  return detail::wrap(matrix, assignment);
}

/**
 * Uniformly random feasible alignment; deterministic for a fixed seed.
 */
inline Alignment random_align(const SimilarityMatrix& matrix, std::optional<Budget> budget,
                              std::uint64_t seed) {
  if (budget) {
    detail::check_selective(matrix, *budget);
  } else {
    detail::check_complete(matrix);
  }
  const int nr = static_cast<int>(matrix.rows());
  const int nc = static_cast<int>(matrix.cols());
  const int need = budget ? budget->value : nr;

  std::mt19937_64 rng(seed);
  // Rows taking part (partial Fisher-Yates keeps every b-subset equally
  // likely); complete mode uses all rows.
  std::vector<int> rows(nr);
  std::iota(rows.begin(), rows.end(), 0);
  if (budget) {
    for (int i = 0; i < need; ++i) {
      const int j = i + static_cast<int>(detail::draw(rng, static_cast<std::uint64_t>(nr - i)));
      std::swap(rows[i], rows[j]);
    }
  }
  std::vector<int> cols(nc);
  std::iota(cols.begin(), cols.end(), 0);
  for (int i = 0; i < need; ++i) {
    const int j = i + static_cast<int>(detail::draw(rng, static_cast<std::uint64_t>(nc - i)));
    std::swap(cols[i], cols[j]);
  }

  std::vector<int> assignment(nr, detail::kUnassigned);
  for (int i = 0; i < need; ++i) assignment[rows[i]] = cols[i];
  return detail::wrap(matrix, assignment);
}

// --- Alignment serialization ------------------------------------------------

inline nlohmann::json alignment_to_json(const Alignment& alignment) {
  nlohmann::json assignments = nlohmann::json::object();
  for (const auto& [id, para] : alignment.assignments) assignments[id] = para;
  return nlohmann::json{{"assignments", assignments}, {"objective", alignment.objective}};
}

inline void save_alignment(const Alignment& alignment, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write alignment file: " + path);
  out << alignment_to_json(alignment).dump(2) << '\n';
}

inline Alignment load_alignment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alignment file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("alignment " + path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("assignments") || !doc["assignments"].is_object()) {
    throw DataError("alignment $.assignments: expected object");
  }
  Alignment alignment;
  std::map<int, std::string> seen;
  for (const auto& [id, value] : doc["assignments"].items()) {
    if (!value.is_number_integer()) {
      throw DataError("alignment $.assignments." + id + ": expected integer");
    }
    const int para = value.get<int>();
    if (para < 0) throw DataError("alignment $.assignments." + id + ": negative index");
    auto [it, inserted] = seen.emplace(para, id);
    if (!inserted) {
      throw DataError("alignment $.assignments: paragraph " + std::to_string(para) +
                      " assigned to both '" + it->second + "' and '" + id + "'");
    }
    alignment.assignments[id] = para;
  }
  if (doc.contains("objective")) {
    if (!doc["objective"].is_number()) throw DataError("alignment $.objective: expected number");
    alignment.objective = doc["objective"].get<double>();
  }
  return alignment;
}

}  // namespace sandi
