#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kf/document.hpp"
#include "kf/hash.hpp"
#include "kf/unicode.hpp"

// Exact-match deduplication. Texts are NFC-normalized (composed and
// decomposed Korean spell the same syllable) and compared by a 128-bit
// hash with full byte verification on hash hits, so the exact-match
// guarantee does not rest on hash quality. Near-duplicates pass through
// untouched; a one-byte difference is a different document.

namespace kf {

class DedupSet {
 public:
  // True when this text is new; false when an NFC byte-identical text was
  // already inserted.
  bool insert(std::string_view text) {
    std::string norm = uni::nfc(text);
    const hash::Hash128 h = hash::murmur3_x64_128(norm);
    auto [it, fresh] = buckets_.try_emplace(h);
    if (!fresh) {
      for (const std::string& seen : it->second)
        if (seen == norm) return false;
    }
    it->second.push_back(std::move(norm));
    ++size_;
    return true;
  }

  std::size_t size() const { return size_; }

 private:
  std::unordered_map<hash::Hash128, std::vector<std::string>, hash::Hash128Hasher> buckets_;
  std::size_t size_ = 0;
};

// Keep-first, order-preserving. `removed`, when given, receives the count
// of discarded duplicates.
inline std::vector<Document> dedup_stream(const std::vector<Document>& docs,
                                          std::size_t* removed = nullptr) {
  DedupSet seen;
  std::vector<Document> out;
  out.reserve(docs.size());
  std::size_t dropped = 0;
  for (const Document& d : docs) {
    if (seen.insert(d.text))
      out.push_back(d);
    else
      ++dropped;
  }
  if (removed) *removed = dropped;
  return out;
}

}  // namespace kf
