#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "sandi/corpus.hpp"
#include "sandi/embedding.hpp"
#include "sandi/errors.hpp"

namespace sandi {

// The four image descriptor sources: computer-vision detections, user
// (manual) tags, big-data reverse-image-search tags, and commonsense
// knowledge concepts.
enum class TagSource { CV, MAN, BD, CSK };

inline constexpr std::array<TagSource, 4> kAllSources = {
    TagSource::CV, TagSource::MAN, TagSource::BD, TagSource::CSK};

inline std::string_view source_name(TagSource s) {
  switch (s) {
    case TagSource::CV: return "cv";
    case TagSource::MAN: return "man";
    case TagSource::BD: return "bd";
    case TagSource::CSK: return "csk";
  }
  return "";
}

// Subset of {CV, MAN, BD, CSK} selecting which tag bags feed srel.
struct SourceSet {
  bool cv = false;
  bool man = false;
  bool bd = false;
  bool csk = false;

  static SourceSet all() { return {true, true, true, true}; }
  static SourceSet star() { return {true, true, true, false}; }  // CV+MAN+BD
  static SourceSet only(TagSource s) {
    SourceSet set;
    set.set(s, true);
    return set;
  }

  // Parses a comma-separated list like "cv,man,bd".
  static SourceSet parse(std::string_view list) {
    SourceSet set;
    std::string item;
    std::istringstream in{std::string(list)};
    while (std::getline(in, item, ',')) {
      item = to_lower(item);
      item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
      if (item.empty()) continue;
      bool known = false;
      for (TagSource s : kAllSources) {
        if (item == source_name(s)) {
          set.set(s, true);
          known = true;
        }
      }
      if (!known) throw UsageError("unknown tag source: '" + item + "'");
    }
    if (set.empty()) throw UsageError("source set is empty: '" + std::string(list) + "'");
    return set;
  }

  bool has(TagSource s) const {
    switch (s) {
      case TagSource::CV: return cv;
      case TagSource::MAN: return man;
      case TagSource::BD: return bd;
      case TagSource::CSK: return csk;
    }
    return false;
  }

  void set(TagSource s, bool value) {
    switch (s) {
      case TagSource::CV: cv = value; break;
      case TagSource::MAN: man = value; break;
      case TagSource::BD: bd = value; break;
      case TagSource::CSK: csk = value; break;
    }
  }

  bool empty() const { return !cv && !man && !bd && !csk; }

  std::string to_string() const {
    std::string out;
    for (TagSource s : kAllSources) {
      if (!has(s)) continue;
      if (!out.empty()) out += ',';
      out += source_name(s);
    }
    return out;
  }
};

// An image and its tag bags keyed by source. Tags are lowercased at load.
struct ImageDescriptor {
  std::string id;
  std::vector<std::string> cv;
  std::vector<std::string> man;
  std::vector<std::string> bd;
  std::vector<std::string> csk;
  std::optional<std::string> caption;
  std::optional<std::string> story;  // source-story id, when known

  const std::vector<std::string>& tags(TagSource s) const {
    switch (s) {
      case TagSource::CV: return cv;
      case TagSource::MAN: return man;
      case TagSource::BD: return bd;
      case TagSource::CSK: return csk;
    }
    return cv;
  }

  std::vector<std::string>& tags(TagSource s) {
    return const_cast<std::vector<std::string>&>(
        static_cast<const ImageDescriptor*>(this)->tags(s));
  }

  // Concatenated tag bags over the selected sources, in CV/MAN/BD/CSK order.
  std::vector<std::string> tags_union(SourceSet sources) const {
    std::vector<std::string> out;
    for (TagSource s : kAllSources) {
      if (!sources.has(s)) continue;
      const auto& bag = tags(s);
      out.insert(out.end(), bag.begin(), bag.end());
    }
    return out;
  }
};

struct ImagePool {
  std::vector<ImageDescriptor> images;

  const ImageDescriptor* find(std::string_view id) const {
    for (const auto& img : images) {
      if (img.id == id) return &img;
    }
    return nullptr;
  }

  // Images whose source-story id matches; images without one are kept only
  // when nothing in the pool carries a story id.
  ImagePool for_story(std::string_view story_id) const {
    bool any_tagged = std::any_of(images.begin(), images.end(),
                                  [](const ImageDescriptor& i) { return i.story.has_value(); });
    if (!any_tagged) return *this;
    ImagePool subset;
    for (const auto& img : images) {
      if (img.story && *img.story == story_id) subset.images.push_back(img);
    }
    return subset;
  }
};

// The six ConceptNet relations used for tag-space enrichment.
enum class CskRelation {
  UsedFor,
  HasProperty,
  Causes,
  AtLocation,
  LocatedNear,
  ConceptuallyRelatedTo,
};

inline std::optional<CskRelation> parse_relation(std::string_view name) {
  const std::string n = to_lower(name);
  if (n == "used_for") return CskRelation::UsedFor;
  if (n == "has_property") return CskRelation::HasProperty;
  if (n == "causes") return CskRelation::Causes;
  if (n == "at_location") return CskRelation::AtLocation;
  if (n == "located_near") return CskRelation::LocatedNear;
  if (n == "conceptually_related_to") return CskRelation::ConceptuallyRelatedTo;
  return std::nullopt;
}

struct CskAssertion {
  std::string subject;
  CskRelation relation;
  std::string object;
};

// Search-result proxies for one concept; at most 10 snippets.
struct SnippetSet {
  std::string term;
  std::vector<std::string> snippets;
};

/**
 * Pool JSON:
 *   { "images": [ { "id": str,
 *                   "tags": {"cv": [str], "man": [str], "bd": [str], "csk": [str]}?,
 *                   "caption": str?, "story": str? }, ... ] }
 * Any tag source may be absent.
 */
inline ImagePool load_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pool file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("pool " + path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array()) {
    throw DataError("pool $.images: expected array");
  }

  ImagePool pool;
  std::unordered_set<std::string> seen;
  std::size_t index = 0;
  for (const auto& entry : doc["images"]) {
    const std::string where = "pool $.images[" + std::to_string(index) + "]";
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string()) {
      throw DataError(where + ".id: expected string");
    }
    ImageDescriptor img;
    img.id = entry["id"].get<std::string>();
    if (!seen.insert(img.id).second) {
      throw DataError(where + ": duplicate image id '" + img.id + "'");
    }
    if (entry.contains("tags")) {
      const auto& tags = entry["tags"];
      if (!tags.is_object()) throw DataError(where + ".tags: expected object");
      for (TagSource s : kAllSources) {
        const std::string key{source_name(s)};
        if (!tags.contains(key)) continue;
        if (!tags[key].is_array()) throw DataError(where + ".tags." + key + ": expected array");
        for (const auto& tag : tags[key]) {
          if (!tag.is_string()) throw DataError(where + ".tags." + key + ": expected strings");
          img.tags(s).push_back(to_lower(tag.get<std::string>()));
        }
      }
    }
    if (entry.contains("caption")) {
      if (!entry["caption"].is_string()) throw DataError(where + ".caption: expected string");
      img.caption = entry["caption"].get<std::string>();
    }
    if (entry.contains("story")) {
      if (!entry["story"].is_string()) throw DataError(where + ".story: expected string");
      img.story = entry["story"].get<std::string>();
    }
    pool.images.push_back(std::move(img));
    ++index;
  }
  return pool;
}

// TSV, one assertion per line: subject \t relation \t object.
// Unknown relations are a data error; subject and object are lowercased.
inline std::vector<CskAssertion> load_assertions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open assertions file: " + path);
  std::vector<CskAssertion> assertions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string subject, relation, object;
    if (!std::getline(row, subject, '\t') || !std::getline(row, relation, '\t') ||
        !std::getline(row, object, '\t')) {
      throw DataError("assertions line " + std::to_string(line_no) +
                      ": expected subject<TAB>relation<TAB>object");
    }
    auto rel = parse_relation(relation);
    if (!rel) {
      throw DataError("assertions line " + std::to_string(line_no) +
                      ": unknown relation '" + relation + "'");
    }
    assertions.push_back({to_lower(subject), *rel, to_lower(object)});
  }
  return assertions;
}

// JSON mapping concept -> list of at most 10 snippet strings.
inline std::map<std::string, SnippetSet> load_snippets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open snippets file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("snippets " + path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw DataError("snippets $: expected object");

  std::map<std::string, SnippetSet> sets;
  for (const auto& [term, value] : doc.items()) {
    if (!value.is_array()) {
      throw DataError("snippets $." + term + ": expected array of strings");
    }
    if (value.size() > 10) {
      throw DataError("snippets $." + term + ": more than 10 snippets");
    }
    SnippetSet set;
    set.term = to_lower(term);
    for (const auto& snippet : value) {
      if (!snippet.is_string()) {
        throw DataError("snippets $." + term + ": expected strings");
      }
      set.snippets.push_back(snippet.get<std::string>());
    }
    sets[set.term] = std::move(set);
  }
  return sets;
}

/**
 * Candidate CSK terms for an image: objects of assertions whose subject
 * matches any existing tag (case-insensitively). Duplicates collapse and
 * terms already present as tags are excluded. Existing tags are untouched.
 */
inline std::vector<std::string> enrich_with_csk(const ImageDescriptor& image,
                                                const std::vector<CskAssertion>& assertions) {
  std::unordered_set<std::string> existing;
  for (TagSource s : kAllSources) {
    for (const auto& tag : image.tags(s)) existing.insert(to_lower(tag));
  }
  std::set<std::string> candidates;  // ordered: deterministic output
  for (const auto& assertion : assertions) {
    const std::string subject = to_lower(assertion.subject);
    const std::string object = to_lower(assertion.object);
    if (!existing.count(subject)) continue;
    if (existing.count(object)) continue;
    candidates.insert(object);
  }
  return {candidates.begin(), candidates.end()};
}

/**
 * Informativeness filter: keep a candidate concept iff the mean vector of
 * its search snippets is cosine-similar to the mean vector of the image
 * context at threshold tau. Drops when either mean is unresolvable.
 */
inline bool informativeness_filter(const std::vector<std::string>& image_context,
                                   const SnippetSet& snippets,
                                   const EmbeddingStore& store, double tau,
                                   const StopwordSet& stopwords = default_stopwords()) {
  auto context_mean = mean_vector(image_context, store);
  if (!context_mean) return false;
  std::vector<std::string> snippet_tokens;
  for (const auto& snippet : snippets.snippets) {
    for (auto& tok : tokenize(snippet, stopwords)) {
      snippet_tokens.push_back(std::move(tok));
    }
  }
  auto snippet_mean = mean_vector(snippet_tokens, store);
  if (!snippet_mean) return false;
  return cosine(*context_mean, *snippet_mean) >= tau;
}

/**
 * Full enrichment pass: CSK candidates from the assertions, filtered by
 * informativeness, appended to each image's CSK bag. Candidates without a
 * snippet set are dropped. Images with no CV/MAN/BD tags are skipped.
 */
inline void apply_csk_enrichment(ImagePool& pool,
                                 const std::vector<CskAssertion>& assertions,
                                 const std::map<std::string, SnippetSet>& snippets,
                                 const EmbeddingStore& store, double tau,
                                 const StopwordSet& stopwords = default_stopwords()) {
  for (ImageDescriptor& image : pool.images) {
    auto context = image.tags_union(SourceSet::star());
    if (context.empty()) continue;
    for (const auto& candidate : enrich_with_csk(image, assertions)) {
      auto it = snippets.find(candidate);
      if (it == snippets.end()) continue;
      if (informativeness_filter(context, it->second, store, tau, stopwords)) {
        image.csk.push_back(candidate);
      }
    }
  }
}

}  // namespace sandi
