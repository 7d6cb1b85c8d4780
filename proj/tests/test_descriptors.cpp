#include "sandi/descriptors.hpp"

#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "sandi/embedding.hpp"

namespace sandi {
namespace {

std::string write_temp(const std::string& name, const std::string& contents) {
  const std::string path = testing::TempDir() + "/" + name;
  std::ofstream out(path);
  out << contents;
  return path;
}

TEST(SourceSet, ParseAndRender) {
  auto set = SourceSet::parse("cv,man");
  EXPECT_TRUE(set.has(TagSource::CV));
  EXPECT_TRUE(set.has(TagSource::MAN));
  EXPECT_FALSE(set.has(TagSource::BD));
  EXPECT_EQ(set.to_string(), "cv,man");
  EXPECT_EQ(SourceSet::parse("CSK , BD").to_string(), "bd,csk");
  EXPECT_THROW(SourceSet::parse("cv,huh"), UsageError);
  EXPECT_THROW(SourceSet::parse(""), UsageError);
}

TEST(LoadPool, ParsesTagsLowercased) {
  auto path = write_temp("pool_ok.json", R"({
    "images": [
      {"id": "img1", "tags": {"cv": ["Beach", "person"], "man": ["Playa Ancon"]},
       "caption": "white sands", "story": "s1"},
      {"id": "img2", "tags": {"bd": ["ancon cuba"]}}
    ]
  })");
  auto pool = load_pool(path);
  ASSERT_EQ(pool.images.size(), 2u);
  EXPECT_EQ(pool.images[0].cv, (std::vector<std::string>{"beach", "person"}));
  EXPECT_EQ(pool.images[0].man, (std::vector<std::string>{"playa ancon"}));
  EXPECT_EQ(pool.images[0].story.value(), "s1");
  EXPECT_TRUE(pool.images[1].csk.empty());
  EXPECT_FALSE(pool.images[1].story.has_value());
}

TEST(LoadPool, DuplicateIdRejected) {
  auto path = write_temp("pool_dup.json",
                         R"({"images": [{"id": "a"}, {"id": "a"}]})");
  EXPECT_THROW(load_pool(path), DataError);
}

TEST(LoadPool, ForStoryFiltersWhenTagged) {
  auto path = write_temp("pool_story.json", R"({
    "images": [
      {"id": "a", "story": "s1"}, {"id": "b", "story": "s2"}, {"id": "c", "story": "s1"}
    ]
  })");
  auto pool = load_pool(path);
  auto subset = pool.for_story("s1");
  ASSERT_EQ(subset.images.size(), 2u);
  EXPECT_EQ(subset.images[0].id, "a");
  EXPECT_EQ(subset.images[1].id, "c");
}

TEST(LoadAssertions, ParsesTsv) {
  auto path = write_temp("assert.tsv",
                         "hike\thas_property\tfun\n"
                         "hike\tused_for\toutdoor activity\n");
  auto assertions = load_assertions(path);
  ASSERT_EQ(assertions.size(), 2u);
  EXPECT_EQ(assertions[0].subject, "hike");
  EXPECT_EQ(assertions[0].relation, CskRelation::HasProperty);
  EXPECT_EQ(assertions[0].object, "fun");
}

TEST(LoadAssertions, UnknownRelationRejected) {
  auto path = write_temp("assert_bad.tsv", "hike\tis_a\tactivity\n");
  EXPECT_THROW(load_assertions(path), DataError);
}

TEST(LoadSnippets, EnforcesCap) {
  auto path = write_temp("snips.json", R"({"fun": ["a", "b"]})");
  auto sets = load_snippets(path);
  EXPECT_EQ(sets.at("fun").snippets.size(), 2u);

  std::string eleven = R"({"x": ["1","2","3","4","5","6","7","8","9","10","11"]})";
  auto bad = write_temp("snips_bad.json", eleven);
  EXPECT_THROW(load_snippets(bad), DataError);
}

ImageDescriptor hiking_image() {
  ImageDescriptor img;
  img.id = "img";
  img.man = {"hike"};
  return img;
}

TEST(EnrichWithCsk, SubjectMatchYieldsObject) {
  auto candidates = enrich_with_csk(hiking_image(), {{"hike", CskRelation::HasProperty, "fun"}});
  EXPECT_EQ(candidates, (std::vector<std::string>{"fun"}));
}

TEST(EnrichWithCsk, SubjectMismatchYieldsNothing) {
  auto candidates = enrich_with_csk(hiking_image(), {{"swim", CskRelation::Causes, "splash"}});
  EXPECT_TRUE(candidates.empty());
}

TEST(EnrichWithCsk, DuplicateObjectsCollapse) {
  auto candidates = enrich_with_csk(
      hiking_image(), {{"hike", CskRelation::HasProperty, "fun"},
                       {"hike", CskRelation::ConceptuallyRelatedTo, "fun"}});
  EXPECT_EQ(candidates, (std::vector<std::string>{"fun"}));
}

TEST(EnrichWithCsk, ExistingTagsExcludedAndUntouched) {
  ImageDescriptor img = hiking_image();
  img.cv = {"trail"};
  auto candidates =
      enrich_with_csk(img, {{"hike", CskRelation::AtLocation, "trail"},
                            {"hike", CskRelation::HasProperty, "fun"}});
  EXPECT_EQ(candidates, (std::vector<std::string>{"fun"}));
  EXPECT_EQ(img.man, (std::vector<std::string>{"hike"}));
  EXPECT_EQ(img.cv, (std::vector<std::string>{"trail"}));
}

TEST(EnrichWithCsk, CaseInsensitiveSubjectMatch) {
  auto candidates = enrich_with_csk(hiking_image(), {{"HIKE", CskRelation::HasProperty, "Fun"}});
  EXPECT_EQ(candidates, (std::vector<std::string>{"fun"}));
}

EmbeddingStore filter_store() {
  // hike/trail/boots cluster vs festival/dance cluster.
  return EmbeddingStore::from_entries(2, {{"hike", {1.0, 0.0}},
                                          {"trail", {0.9, 0.1}},
                                          {"boots", {0.8, 0.0}},
                                          {"outdoor", {0.95, 0.05}},
                                          {"festival", {0.0, 1.0}},
                                          {"dance", {0.1, 0.9}}});
}

TEST(InformativenessFilter, IdenticalSnippetsKeep) {
  auto store = filter_store();
  SnippetSet snippets{"outdoor activity", {"hike trail"}};
  EXPECT_TRUE(informativeness_filter({"hike", "trail"}, snippets, store, 0.99));
}

TEST(InformativenessFilter, OrthogonalSnippetsDrop) {
  auto store = EmbeddingStore::from_entries(2, {{"hike", {1.0, 0.0}}, {"festival", {0.0, 1.0}}});
  SnippetSet snippets{"fun", {"festival festival"}};
  EXPECT_FALSE(informativeness_filter({"hike"}, snippets, store, 0.5));
}

TEST(InformativenessFilter, UnresolvableMeansDrop) {
  auto store = filter_store();
  SnippetSet empty{"x", {}};
  EXPECT_FALSE(informativeness_filter({"hike"}, empty, store, 0.0));
  SnippetSet known{"x", {"hike"}};
  EXPECT_FALSE(informativeness_filter({"unknowable"}, known, store, 0.0));
}

TEST(InformativenessFilter, SnippetOrderIrrelevant) {
  auto store = filter_store();
  SnippetSet forward{"c", {"hike trail", "boots festival"}};
  SnippetSet backward{"c", {"boots festival", "hike trail"}};
  const std::vector<std::string> context{"hike", "boots"};
  EXPECT_EQ(informativeness_filter(context, forward, store, 0.6),
            informativeness_filter(context, backward, store, 0.6));
}

// The worked example: context "hike, saturday, waterproof boots" keeps
// "outdoor activity" and drops "fun" under snippet fixtures whose tokens
// are either aligned with or scattered around the context.
TEST(InformativenessFilter, OutdoorActivityBeatsFun) {
  auto store = EmbeddingStore::from_entries(
      3, {{"hike", {1.0, 0.0, 0.0}},
          {"saturday", {0.6, 0.2, 0.2}},
          {"waterproof", {0.9, 0.1, 0.0}},
          {"boots", {0.8, 0.2, 0.0}},
          {"trail", {0.9, 0.0, 0.1}},
          {"mountain", {0.95, 0.05, 0.0}},
          {"gear", {0.7, 0.3, 0.0}},
          {"party", {0.0, 1.0, 0.0}},
          {"clown", {0.0, 0.9, 0.1}},
          {"casino", {0.0, 0.1, 0.9}},
          {"circus", {0.1, 0.8, 0.1}}});
  const std::vector<std::string> context{"hike", "saturday", "waterproof", "boots"};
  SnippetSet outdoor{"outdoor activity",
                     {"mountain trail hike", "hiking gear boots", "trail mountain"}};
  SnippetSet fun{"fun", {"party clown", "casino night", "circus party"}};
  const double tau = 0.5;
  EXPECT_TRUE(informativeness_filter(context, outdoor, store, tau));
  EXPECT_FALSE(informativeness_filter(context, fun, store, tau));
}

TEST(InformativenessFilter, MonotoneInTau) {
  auto store = filter_store();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const std::vector<std::string> vocab{"hike", "trail", "boots", "outdoor", "festival", "dance"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> context;
    SnippetSet snippets{"c", {}};
    for (const auto& word : vocab) {
      if (coin(rng) < 0.4) context.push_back(word);
      if (coin(rng) < 0.4) snippets.snippets.push_back(word);
    }
    const bool strict = informativeness_filter(context, snippets, store, 0.7);
    const bool loose = informativeness_filter(context, snippets, store, 0.3);
    if (strict) {
      EXPECT_TRUE(loose);
    }
  }
}

TEST(ApplyCskEnrichment, AppendsOnlyInformativeCandidates) {
  ImagePool pool;
  pool.images.push_back(hiking_image());
  std::vector<CskAssertion> assertions{{"hike", CskRelation::HasProperty, "fun"},
                                       {"hike", CskRelation::UsedFor, "outdoor"}};
  std::map<std::string, SnippetSet> snippets;
  snippets["outdoor"] = {"outdoor", {"hike trail"}};
  snippets["fun"] = {"fun", {"festival dance"}};
  auto store = filter_store();
  apply_csk_enrichment(pool, assertions, snippets, store, 0.5);
  EXPECT_EQ(pool.images[0].csk, (std::vector<std::string>{"outdoor"}));
  EXPECT_EQ(pool.images[0].man, (std::vector<std::string>{"hike"}));
}

}  // namespace
}  // namespace sandi
