#pragma once

#include <map>
#include <sstream>
#include <string>

#include "sandi/corpus.hpp"
#include "sandi/descriptors.hpp"
#include "sandi/errors.hpp"
#include "sandi/solver.hpp"

namespace sandi {

namespace detail {

inline std::map<int, std::string> image_by_paragraph(const Story& story,
                                                     const Alignment& alignment) {
  std::map<int, std::string> placed;
  for (const auto& [image_id, para] : alignment.assignments) {
    if (para < 0 || para >= static_cast<int>(story.paragraphs.size())) {
      throw DataError("emit: assignment for '" + image_id + "' references unknown paragraph " +
                      std::to_string(para));
    }
    auto [it, inserted] = placed.emplace(para, image_id);
    if (!inserted) {
      throw DataError("emit: paragraph " + std::to_string(para) + " assigned to both '" +
                      it->second + "' and '" + image_id + "'");
    }
  }
  return placed;
}

inline std::string alt_text(const ImagePool& pool, const std::string& image_id) {
  const ImageDescriptor* img = pool.find(image_id);
  if (!img || img->man.empty()) return image_id;
  std::string alt;
  for (const auto& tag : img->man) {
    if (!alt.empty()) alt += ", ";
    alt += tag;
  }
  return alt;
}

inline std::string image_src(const std::string& image_dir, const std::string& image_id) {
  return image_dir.empty() ? image_id : image_dir + "/" + image_id;
}

inline std::string html_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/**
 * Multimodal Markdown document: paragraphs in story order, each assigned
 * image emitted directly above its paragraph with the image's MAN tags as
 * alt text.
 */
inline std::string render_markdown(const Story& story, const Alignment& alignment,
                                   const ImagePool& pool, const std::string& image_dir = "") {
  const auto placed = detail::image_by_paragraph(story, alignment);
  std::ostringstream out;
  for (const Paragraph& paragraph : story.paragraphs) {
    auto it = placed.find(paragraph.index);
    if (it != placed.end()) {
      out << "![" << detail::alt_text(pool, it->second) << "]("
          << detail::image_src(image_dir, it->second) << ")\n\n";
    }
    out << paragraph.text << "\n\n";
  }
  return out.str();
}

inline std::string render_html(const Story& story, const Alignment& alignment,
                               const ImagePool& pool, const std::string& image_dir = "") {
  const auto placed = detail::image_by_paragraph(story, alignment);
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>"
      << detail::html_escape(story.id) << "</title></head>\n<body>\n<article>\n";
  for (const Paragraph& paragraph : story.paragraphs) {
    auto it = placed.find(paragraph.index);
    if (it != placed.end()) {
      out << "<figure><img src=\"" << detail::html_escape(detail::image_src(image_dir, it->second))
          << "\" alt=\"" << detail::html_escape(detail::alt_text(pool, it->second))
          << "\"></figure>\n";
    }
    out << "<p>" << detail::html_escape(paragraph.text) << "</p>\n";
  }
  out << "</article>\n</body>\n</html>\n";
  return out.str();
}

}  // namespace sandi
