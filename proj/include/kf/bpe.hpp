#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "kf/bytemap.hpp"
#include "kf/segmenter.hpp"

// Byte-level BPE with segment-aware training: pair statistics are counted
// inside segments only, so no merge ever spans a segment boundary. Ids are
// dense: 0..255 are the byte alphabet (id = byte value), merges follow in
// rank order, special tokens take the highest ids.

namespace kf::bpe {

struct TokenSpan {
  int id = 0;
  std::size_t start = 0;  // byte offsets into the encoded text
  std::size_t end = 0;
};

namespace detail {
inline std::uint64_t pair_key(int l, int r) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(l)) << 32) |
         static_cast<std::uint32_t>(r);
}
}  // namespace detail

class TokenizerModel {
 public:
  std::vector<std::pair<std::string, std::string>> merges;  // symbol strings, rank order
  std::vector<std::string> specials;
  seg::Segmenter segmenter;
  std::string byte_map = "gpt2";

  std::size_t vocab_size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int id_of(std::string_view token) const {
    const auto it = token_ids_.find(std::string(token));
    return it == token_ids_.end() ? -1 : it->second;
  }

  const std::string& token_of(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw std::invalid_argument("token id " + std::to_string(id) + " out of range");
    return tokens_[id];
  }

  // Raw-byte expansion of a token (specials expand to their literal text).
  const std::string& expansion_of(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= expansions_.size())
      throw std::invalid_argument("token id " + std::to_string(id) + " out of range");
    return expansions_[id];
  }

  bool is_special(int id) const {
    return static_cast<std::size_t>(id) >= tokens_.size() - specials.size();
  }

  // Rebuilds id tables from merges + specials. Throws when a merge operand
  // does not exist yet or a token string is duplicated.
  void finalize() {
    tokens_.clear();
    expansions_.clear();
    token_ids_.clear();
    ranks_.clear();
    tokens_.reserve(256 + merges.size() + specials.size());
    for (int b = 0; b < 256; ++b) {
      tokens_.push_back(bytemap::encode_bytes(std::string(1, static_cast<char>(b))));
      expansions_.push_back(std::string(1, static_cast<char>(b)));
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) token_ids_[tokens_[i]] = static_cast<int>(i);
    int rank = 0;
    for (const auto& [left, right] : merges) {
      const int l = id_of(left), r = id_of(right);
      if (l < 0 || r < 0)
        throw std::runtime_error("merge rank " + std::to_string(rank) +
                                 " references unknown symbol");
      const std::string sym = left + right;
      if (token_ids_.contains(sym))
        throw std::runtime_error("duplicate token string '" + sym + "'");
      const int id = static_cast<int>(tokens_.size());
      tokens_.push_back(sym);
      expansions_.push_back(expansions_[l] + expansions_[r]);
      token_ids_[sym] = id;
      ranks_[detail::pair_key(l, r)] = {rank, id};
      ++rank;
    }
    for (const std::string& sp : specials) {
      if (token_ids_.contains(sp))
        throw std::runtime_error("special token '" + sp + "' collides with a trained token");
      const int id = static_cast<int>(tokens_.size());
      tokens_.push_back(sp);
      expansions_.push_back(sp);
      token_ids_[sp] = id;
    }
  }

  // Lowest merge rank applicable to (l, r), if any.
  std::optional<std::pair<int, int>> rank_of(int l, int r) const {
    const auto it = ranks_.find(detail::pair_key(l, r));
    if (it == ranks_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::string> expansions_;
  std::unordered_map<std::string, int> token_ids_;
  std::unordered_map<std::uint64_t, std::pair<int, int>> ranks_;
};

namespace detail {

// Applies ranked merges to one segment's byte ids: repeatedly merge the
// lowest-ranked adjacent pair, left to right, until none applies.
inline std::vector<int> apply_merges(const TokenizerModel& m, std::vector<int> ids) {
  while (ids.size() >= 2) {
    int best_rank = -1, best_id = -1;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      if (const auto r = m.rank_of(ids[i], ids[i + 1]);
          r && (best_rank < 0 || r->first < best_rank)) {
        best_rank = r->first;
        best_id = r->second;
      }
    }
    if (best_rank < 0) break;
    const auto [left, right] = [&] {
      for (std::size_t i = 0; i + 1 < ids.size(); ++i)
        if (const auto r = m.rank_of(ids[i], ids[i + 1]); r && r->first == best_rank)
          return std::pair<int, int>{ids[i], ids[i + 1]};
      return std::pair<int, int>{-1, -1};
    }();
    std::vector<int> next;
    next.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size();) {
      if (i + 1 < ids.size() && ids[i] == left && ids[i + 1] == right) {
        next.push_back(best_id);
        i += 2;
      } else {
        next.push_back(ids[i]);
        ++i;
      }
    }
    ids = std::move(next);
  }
  return ids;
}

inline std::vector<int> byte_ids(std::string_view raw) {
  std::vector<int> ids;
  ids.reserve(raw.size());
  for (const char c : raw) ids.push_back(static_cast<unsigned char>(c));
  return ids;
}

}  // namespace detail

// Encode with byte spans. Special-token strings are matched first,
// leftmost-longest; remaining stretches are segmented and BPE'd per
// segment, so no token crosses a segment boundary.
inline std::vector<TokenSpan> encode_spans(const TokenizerModel& m, std::string_view text,
                                           bool use_specials = true) {
  std::vector<TokenSpan> out;

  const auto encode_plain = [&](std::string_view span, std::size_t base) {
    for (const auto& piece : seg::segment_or_fallback(span, m.segmenter)) {
      std::size_t at = base;
      std::vector<int> ids = detail::apply_merges(m, detail::byte_ids(piece.text));
      for (const int id : ids) {
        const std::size_t len = m.expansion_of(id).size();
        out.push_back({id, at, at + len});
        at += len;
      }
      base += piece.text.size();
    }
  };

  if (!use_specials || m.specials.empty()) {
    encode_plain(text, 0);
    return out;
  }

  std::size_t pos = 0, plain_start = 0;
  while (pos < text.size()) {
    std::size_t best_len = 0;
    int best_id = -1;
    for (const std::string& sp : m.specials) {
      if (sp.size() > best_len && text.compare(pos, sp.size(), sp) == 0) {
        best_len = sp.size();
        best_id = m.id_of(sp);
      }
    }
    if (best_id >= 0) {
      if (plain_start < pos) encode_plain(text.substr(plain_start, pos - plain_start), plain_start);
      out.push_back({best_id, pos, pos + best_len});
      pos += best_len;
      plain_start = pos;
    } else {
      ++pos;
    }
  }
  if (plain_start < text.size()) encode_plain(text.substr(plain_start), plain_start);
  return out;
}

inline std::vector<int> encode(const TokenizerModel& m, std::string_view text,
                               bool use_specials = true) {
  std::vector<int> ids;
  for (const TokenSpan& t : encode_spans(m, text, use_specials)) ids.push_back(t.id);
  return ids;
}

inline std::string decode(const TokenizerModel& m, const std::vector<int>& ids) {
  std::string out;
  for (const int id : ids) out += m.expansion_of(id);
  return out;
}

// ---- Training ---------------------------------------------------------

// Streaming segment-frequency accumulator; training cost depends on the
// number of distinct segments, not corpus length.
class SegmentCounts {
 public:
  void add_text(std::string_view text, const seg::Segmenter& sg) {
    for (const auto& piece : seg::segment_or_fallback(text, sg))
      if (!piece.text.empty()) ++counts_[piece.text];
  }

  const std::map<std::string, long long>& counts() const { return counts_; }

 private:
  std::map<std::string, long long> counts_;  // ordered: deterministic iteration
};

inline TokenizerModel train_bpe(const SegmentCounts& segments, std::size_t vocab_size,
                                const std::vector<std::string>& specials,
                                const seg::Segmenter& sg) {
  if (vocab_size < 256 + specials.size())
    throw std::invalid_argument("vocab_size must be at least 256 + |specials|");
  const std::size_t n_merges = vocab_size - 256 - specials.size();

  struct Word {
    std::vector<int> syms;
    long long count;
  };
  std::vector<Word> words;
  for (const auto& [text, count] : segments.counts())
    words.push_back({detail::byte_ids(text), count});

  // Expansions and symbol strings for tie-breaking and duplicate guarding.
  std::vector<std::string> exp(256), sym(256);
  std::unordered_set<std::string> taken;
  for (int b = 0; b < 256; ++b) {
    exp[b] = std::string(1, static_cast<char>(b));
    sym[b] = bytemap::encode_bytes(exp[b]);
    taken.insert(sym[b]);
  }
  for (const std::string& sp : specials) taken.insert(sp);

  std::unordered_map<std::uint64_t, long long> counts;
  std::unordered_map<std::uint64_t, std::unordered_set<std::size_t>> occurs;
  const auto add_word = [&](std::size_t wi, long long sign) {
    const Word& w = words[wi];
    for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
      const std::uint64_t key = detail::pair_key(w.syms[i], w.syms[i + 1]);
      counts[key] += sign * w.count;
      if (sign > 0) occurs[key].insert(wi);
    }
  };
  for (std::size_t i = 0; i < words.size(); ++i) add_word(i, +1);

  TokenizerModel model;
  model.specials = specials;
  model.segmenter = sg;

  for (std::size_t r = 0; r < n_merges; ++r) {
    // Best pair: highest count; ties by lexicographic (left, right) byte
    // expansion. Pairs whose concatenated symbol is already a token are
    // skipped so token strings stay unique.
    bool found = false;
    std::uint64_t best_key = 0;
    long long best_count = 0;
    for (const auto& [key, count] : counts) {
      if (count <= 0) continue;
      const int l = static_cast<int>(key >> 32), rr = static_cast<int>(key & 0xFFFFFFFFu);
      if (taken.contains(sym[l] + sym[rr])) continue;
      if (!found || count > best_count) {
        found = true;
        best_key = key;
        best_count = count;
        continue;
      }
      if (count == best_count) {
        const int bl = static_cast<int>(best_key >> 32),
                  br = static_cast<int>(best_key & 0xFFFFFFFFu);
        if (std::pair(std::string_view(exp[l]), std::string_view(exp[rr])) <
            std::pair(std::string_view(exp[bl]), std::string_view(exp[br])))
          best_key = key;
      }
    }
    if (!found) break;  // corpus exhausted before reaching the target size

    const int l = static_cast<int>(best_key >> 32),
              rr = static_cast<int>(best_key & 0xFFFFFFFFu);
    const int nid = 256 + static_cast<int>(model.merges.size());
    exp.push_back(exp[l] + exp[rr]);
    sym.push_back(sym[l] + sym[rr]);
    taken.insert(sym[nid]);
    model.merges.emplace_back(sym[l], sym[rr]);

    // Rewrite affected words; stale occurs entries are harmless because
    // contributions are removed and re-added around the rewrite.
    const auto affected = occurs[best_key];
    for (const std::size_t wi : affected) {
      add_word(wi, -1);
      std::vector<int>& s = words[wi].syms;
      std::vector<int> next;
      next.reserve(s.size());
      for (std::size_t i = 0; i < s.size();) {
        if (i + 1 < s.size() && s[i] == l && s[i + 1] == rr) {
          next.push_back(nid);
          i += 2;
        } else {
          next.push_back(s[i]);
          ++i;
        }
      }
      s = std::move(next);
      add_word(wi, +1);
    }
  }

  model.finalize();
  return model;
}

inline TokenizerModel train_bpe(const std::vector<std::string>& texts, std::size_t vocab_size,
                                const std::vector<std::string>& specials,
                                const seg::Segmenter& sg) {
  SegmentCounts counter;
  for (const std::string& t : texts) counter.add_text(t, sg);
  return train_bpe(counter, vocab_size, specials, sg);
}

inline std::vector<std::string> default_specials() {
  return {"<|endoftext|>", "<|unk|>", "<|pad|>"};
}

// Smallest multiple of `multiple` that is >= vocab_size.
inline std::size_t padded_vocab(std::size_t vocab_size, std::size_t multiple) {
  if (multiple < 1) throw std::invalid_argument("padding multiple must be >= 1");
  return (vocab_size + multiple - 1) / multiple * multiple;
}

// ---- Serialization ----------------------------------------------------
// Two files: model.json (header: byte map name, segmenter, specials, and
// the token->id table) and merges.txt (one "left right" pair per line in
// rank order; symbol strings never contain spaces).

inline void save(const TokenizerModel& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["byte_map"] = m.byte_map;
  j["segmenter"] = {{"kind", std::string(seg::to_string(m.segmenter.kind))},
                    {"command", m.segmenter.command}};
  j["specials"] = m.specials;
  auto vocab = nlohmann::ordered_json::object();
  for (std::size_t id = 0; id < m.vocab_size(); ++id)
    vocab[m.tokens()[id]] = id;
  j["vocab"] = std::move(vocab);
  {
    std::ofstream out(dir / "model.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "model.json").string());
    out << j.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "merges.txt", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "merges.txt").string());
    for (const auto& [l, r] : m.merges) out << l << ' ' << r << '\n';
  }
}

inline TokenizerModel load(const std::filesystem::path& dir) {
  std::ifstream jf(dir / "model.json", std::ios::binary);
  if (!jf) throw std::runtime_error("cannot read " + (dir / "model.json").string());
  nlohmann::json j = nlohmann::json::parse(jf);

  TokenizerModel m;
  m.byte_map = j.at("byte_map").get<std::string>();
  if (m.byte_map != "gpt2")
    throw std::runtime_error("unsupported byte map '" + m.byte_map + "'");
  m.segmenter.kind = seg::kind_from_string(j.at("segmenter").at("kind").get<std::string>());
  m.segmenter.command = j.at("segmenter").at("command").get<std::string>();
  m.specials = j.at("specials").get<std::vector<std::string>>();

  std::ifstream mf(dir / "merges.txt", std::ios::binary);
  if (!mf) throw std::runtime_error("cannot read " + (dir / "merges.txt").string());
  std::string line;
  while (std::getline(mf, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size())
      throw std::runtime_error("malformed merges line: '" + line + "'");
    m.merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }

  m.finalize();

  // The stored vocab table must agree with the one rebuilt from merges.
  const auto& vocab = j.at("vocab");
  if (vocab.size() != m.vocab_size())
    throw std::runtime_error("vocab size mismatch: file has " + std::to_string(vocab.size()) +
                             ", merges imply " + std::to_string(m.vocab_size()));
  for (const auto& [token, id] : vocab.items()) {
    if (m.id_of(token) != id.get<int>())
      throw std::runtime_error("vocab entry mismatch for token '" + token + "'");
  }
  return m;
}

}  // namespace kf::bpe
