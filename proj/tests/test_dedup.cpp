#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "kf/dedup.hpp"
#include "support/oracles.hpp"

using namespace kf;

TEST_CASE("dedup keeps the first of each text", "[dedup]") {
  DedupSet set;
  REQUIRE(set.insert("a"));
  REQUIRE(set.insert("b"));
  REQUIRE_FALSE(set.insert("a"));
  REQUIRE(set.insert("a "));  // near-duplicate is a different document
  REQUIRE(set.size() == 3);
}

TEST_CASE("composed and decomposed Korean are the same document", "[dedup]") {
  DedupSet set;
  REQUIRE(set.insert("한국"));              // 한국 precomposed
  REQUIRE_FALSE(set.insert("한국"));  // same, decomposed
  REQUIRE(set.insert("한국어"));        // 한국어 differs
}

TEST_CASE("dedup_stream matches the quadratic oracle on planted duplicates", "[dedup]") {
  std::mt19937_64 rng(61);
  std::vector<Document> docs;
  std::vector<std::string> texts;
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    const int roll = int(rng() % 100);
    if (roll < 25 && !texts.empty()) {
      // plant an exact duplicate of an earlier doc
      text = texts[rng() % texts.size()];
    } else if (roll < 35 && !texts.empty()) {
      // plant an NFC-variant duplicate: decompose the syllables
      const std::string& base = texts[rng() % texts.size()];
      std::size_t p = 0;
      while (p < base.size()) {
        const char32_t cp = uni::decode(base, p);
        if (cp >= 0xAC00 && cp <= 0xD7A3) {
          const char32_t idx = cp - 0xAC00;
          uni::append(text, 0x1100 + idx / (21 * 28));
          uni::append(text, 0x1161 + (idx % (21 * 28)) / 28);
          if (idx % 28) uni::append(text, 0x11A7 + idx % 28);
        } else {
          uni::append(text, cp);
        }
      }
    } else {
      text = oracle::random_utf8(rng, 24) + "#" + std::to_string(i % 67);
    }
    texts.push_back(text);
    Document d;
    d.id = "d" + std::to_string(i);
    d.source = "s";
    d.text = std::move(text);
    docs.push_back(std::move(d));
  }

  std::size_t removed = 0;
  const auto kept = dedup_stream(docs, &removed);
  const auto expect_idx = oracle::dedup_keep_indices(texts);

  REQUIRE(kept.size() == expect_idx.size());
  REQUIRE(removed == docs.size() - expect_idx.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    REQUIRE(kept[i].id == docs[expect_idx[i]].id);  // order preserved, first kept
  }
  REQUIRE(removed > 100);  // the generator must actually plant duplicates
}

TEST_CASE("empty stream and all-duplicates stream", "[dedup]") {
  std::size_t removed = 99;
  REQUIRE(dedup_stream({}, &removed).empty());
  REQUIRE(removed == 0);

  std::vector<Document> same(5);
  for (int i = 0; i < 5; ++i) {
    same[i].id = "x" + std::to_string(i);
    same[i].source = "s";
    same[i].text = "identical";
  }
  const auto kept = dedup_stream(same, &removed);
  REQUIRE(kept.size() == 1);
  REQUIRE(kept[0].id == "x0");
  REQUIRE(removed == 4);
}
