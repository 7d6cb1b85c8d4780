#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "sandi/corpus.hpp"
#include "sandi/descriptors.hpp"
#include "sandi/embedding.hpp"
#include "sandi/errors.hpp"

namespace sandi {

/**
 * Text-image semantic relatedness: cosine of the mean embedding of the
 * image's tags (over the selected sources) and the mean embedding of the
 * paragraph's concepts. 0 when either side is unresolvable.
 */
inline double srel(const ImageDescriptor& image, const Paragraph& paragraph,
                   const EmbeddingStore& store, SourceSet sources) {
  auto image_mean = mean_vector(image.tags_union(sources), store);
  if (!image_mean) return 0.0;
  auto text_mean = mean_vector(paragraph.concepts, store);
  if (!text_mean) return 0.0;
  return cosine(*image_mean, *text_mean);
}

// Dense |I| x |T| matrix of srel scores. Row order matches the pool,
// column order matches the story.
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::vector<std::string> image_ids, std::size_t paragraph_count,
                   std::vector<double> scores)
      : image_ids_(std::move(image_ids)),
        paragraph_count_(paragraph_count),
        scores_(std::move(scores)) {
    if (image_ids_.empty() || paragraph_count_ == 0) {
      throw UsageError("similarity matrix must be non-empty");
    }
    if (scores_.size() != image_ids_.size() * paragraph_count_) {
      throw UsageError("similarity matrix score count mismatch");
    }
    // srel-built matrices stay within [-1, 1] (cosine clamps); scaled
    // variants used for sensitivity analysis may exceed it.
    for (double s : scores_) {
      if (!std::isfinite(s)) throw UsageError("similarity scores must be finite");
    }
  }

  std::size_t rows() const { return image_ids_.size(); }
  std::size_t cols() const { return paragraph_count_; }
  const std::vector<std::string>& image_ids() const { return image_ids_; }

  double at(std::size_t row, std::size_t col) const {
    return scores_[row * paragraph_count_ + col];
  }

  SimilarityMatrix scaled(double factor) const {
    std::vector<double> scores(scores_);
    for (double& s : scores) s *= factor;
    return SimilarityMatrix(image_ids_, paragraph_count_, std::move(scores));
  }

  // Debug export: header "id,0,1,...", one row per image.
  std::string to_csv() const {
    std::ostringstream out;
    out << "id";
    for (std::size_t c = 0; c < paragraph_count_; ++c) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < rows(); ++r) {
      out << image_ids_[r];
      for (std::size_t c = 0; c < paragraph_count_; ++c) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.9f", at(r, c));
        out << ',' << buf;
      }
      out << '\n';
    }
    return out.str();
  }

 private:
  std::vector<std::string> image_ids_;
  std::size_t paragraph_count_;
  std::vector<double> scores_;
};

// Requires concepts to be extracted for every paragraph beforehand.
inline SimilarityMatrix build_matrix(const ImagePool& pool, const Story& story,
                                     const EmbeddingStore& store, SourceSet sources) {
  if (pool.images.empty()) throw UsageError("build_matrix: empty image pool");
  if (story.paragraphs.empty()) throw UsageError("build_matrix: story has no paragraphs");
  std::vector<std::string> ids;
  ids.reserve(pool.images.size());
  for (const auto& img : pool.images) ids.push_back(img.id);
  std::vector<double> scores;
  scores.reserve(pool.images.size() * story.paragraphs.size());
  for (const auto& img : pool.images) {
    for (const auto& paragraph : story.paragraphs) {
      scores.push_back(srel(img, paragraph, store, sources));
    }
  }
  return SimilarityMatrix(std::move(ids), story.paragraphs.size(), std::move(scores));
}

/**
 * Article-level alignment sensitivity: per ground-truth image, the MAN-tag
 * srel to its ground-truth paragraph minus the mean srel to every other
 * paragraph; averaged over the article's images. Single-paragraph stories
 * use the ground-truth srel alone.
 */
inline double alignment_sensitivity(const Story& story, const ImagePool& pool,
                                    const EmbeddingStore& store) {
  if (!story.has_ground_truth()) {
    throw UsageError("alignment_sensitivity: story '" + story.id + "' has no ground truth");
  }
  const SourceSet man = SourceSet::only(TagSource::MAN);
  double total = 0.0;
  for (const auto& [image_id, gt_index] : story.ground_truth) {
    const ImageDescriptor* image = pool.find(image_id);
    if (!image) {
      throw DataError("alignment_sensitivity: ground-truth image '" + image_id +
                      "' is not in the pool");
    }
    const double gt_score = srel(*image, story.paragraphs[gt_index], store, man);
    if (story.paragraphs.size() == 1) {
      total += gt_score;
      continue;
    }
    double others = 0.0;
    for (const auto& paragraph : story.paragraphs) {
      if (paragraph.index == gt_index) continue;
      others += srel(*image, paragraph, store, man);
    }
    others /= static_cast<double>(story.paragraphs.size() - 1);
    total += gt_score - others;
  }
  return total / static_cast<double>(story.ground_truth.size());
}

}  // namespace sandi
