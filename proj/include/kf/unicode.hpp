#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 and Hangul-aware text helpers shared by the cleaning filters and
// the tokenizer. Grapheme segmentation covers the cases that matter for
// Korean web text (Hangul jamo sequences, CRLF, the common combining-mark
// blocks, ZWJ, variation selectors); it is not a full UAX #29
// implementation.

namespace kf::uni {

constexpr char32_t kReplacement = 0xFFFD;

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_space_or_tab(char c) { return c == ' ' || c == '\t'; }

inline std::string_view trim_ascii(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ascii_space(s[b])) ++b;
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Lowercases ASCII letters only; multi-byte sequences pass through.
inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Decodes the code point starting at `pos` and advances `pos` past it.
// Invalid sequences yield kReplacement and advance one byte.
inline char32_t decode(std::string_view s, std::size_t& pos) {
  const auto at = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char b0 = at(pos);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  const auto cont = [&](std::size_t i) {
    return i < s.size() && (at(i) & 0xC0) == 0x80;
  };
  if ((b0 & 0xE0) == 0xC0) {
    if (b0 >= 0xC2 && cont(pos + 1)) {
      char32_t cp = (char32_t(b0 & 0x1Fu) << 6) | (at(pos + 1) & 0x3Fu);
      pos += 2;
      return cp;
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    if (cont(pos + 1) && cont(pos + 2)) {
      char32_t cp = (char32_t(b0 & 0x0Fu) << 12) | (char32_t(at(pos + 1) & 0x3Fu) << 6) |
                    (at(pos + 2) & 0x3Fu);
      if (cp >= 0x800 && !(cp >= 0xD800 && cp <= 0xDFFF)) {
        pos += 3;
        return cp;
      }
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    if (cont(pos + 1) && cont(pos + 2) && cont(pos + 3)) {
      char32_t cp = (char32_t(b0 & 0x07u) << 18) | (char32_t(at(pos + 1) & 0x3Fu) << 12) |
                    (char32_t(at(pos + 2) & 0x3Fu) << 6) | (at(pos + 3) & 0x3Fu);
      if (cp >= 0x10000 && cp <= 0x10FFFF) {
        pos += 4;
        return cp;
      }
    }
  }
  ++pos;
  return kReplacement;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(char32_t cp) {
  std::string out;
  append(out, cp);
  return out;
}

// Strict validator: rejects overlongs, surrogates, and truncated sequences.
inline bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t need;
    char32_t cp;
    if (b0 < 0x80) {
      ++i;
      continue;
    } else if ((b0 & 0xE0) == 0xC0) {
      if (b0 < 0xC2) return false;
      need = 1;
      cp = b0 & 0x1Fu;
    } else if ((b0 & 0xF0) == 0xE0) {
      need = 2;
      cp = b0 & 0x0Fu;
    } else if ((b0 & 0xF8) == 0xF0) {
      need = 3;
      cp = b0 & 0x07u;
    } else {
      return false;
    }
    if (i + need >= s.size()) return false;
    for (std::size_t k = 1; k <= need; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (b & 0x3Fu);
    }
    if (need == 2 && (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF))) return false;
    if (need == 3 && (cp < 0x10000 || cp > 0x10FFFF)) return false;
    i += need + 1;
  }
  return true;
}

inline std::vector<char32_t> code_points(std::string_view s) {
  std::vector<char32_t> cps;
  cps.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) cps.push_back(decode(s, i));
  return cps;
}

inline std::size_t code_point_count(std::string_view s) {
  std::size_t n = 0, i = 0;
  while (i < s.size()) {
    decode(s, i);
    ++n;
  }
  return n;
}

// ---- Hangul ----------------------------------------------------------

enum class Hangul { none, L, V, T, LV, LVT };

inline Hangul hangul_type(char32_t cp) {
  if ((cp >= 0x1100 && cp <= 0x115F) || (cp >= 0xA960 && cp <= 0xA97C)) return Hangul::L;
  if ((cp >= 0x1160 && cp <= 0x11A7) || (cp >= 0xD7B0 && cp <= 0xD7C6)) return Hangul::V;
  if ((cp >= 0x11A8 && cp <= 0x11FF) || (cp >= 0xD7CB && cp <= 0xD7FB)) return Hangul::T;
  if (cp >= 0xAC00 && cp <= 0xD7A3)
    return ((cp - 0xAC00) % 28 == 0) ? Hangul::LV : Hangul::LVT;
  return Hangul::none;
}

// Canonical composition for modern Hangul (the algorithmic part of NFC).
// Decomposed jamo sequences compose into precomposed syllables; everything
// else passes through unchanged. Korean text is the case that matters for
// this toolkit; scripts needing table-driven composition are out of scope.
inline std::string nfc(std::string_view s) {
  const auto is_l = [](char32_t cp) { return cp >= 0x1100 && cp <= 0x1112; };
  const auto is_v = [](char32_t cp) { return cp >= 0x1161 && cp <= 0x1175; };
  const auto is_t = [](char32_t cp) { return cp >= 0x11A8 && cp <= 0x11C2; };
  std::string out;
  out.reserve(s.size());
  bool have = false;
  char32_t pend = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    const char32_t cp = decode(s, i);
    if (have && is_l(pend) && is_v(cp)) {
      pend = 0xAC00 + ((pend - 0x1100) * 21 + (cp - 0x1161)) * 28;
      continue;
    }
    if (have && pend >= 0xAC00 && pend <= 0xD7A3 && (pend - 0xAC00) % 28 == 0 && is_t(cp)) {
      pend += cp - 0x11A7;
      continue;
    }
    if (have) append(out, pend);
    pend = cp;
    have = true;
  }
  if (have) append(out, pend);
  return out;
}

// ---- Grapheme clusters ------------------------------------------------

inline bool is_extend(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) ||
         (cp >= 0x1DC0 && cp <= 0x1DFF) || (cp >= 0x20D0 && cp <= 0x20FF) ||
         (cp >= 0xFE20 && cp <= 0xFE2F) || cp == 0x200D ||
         (cp >= 0xFE00 && cp <= 0xFE0F) || (cp >= 0x1F3FB && cp <= 0x1F3FF);
}

inline bool grapheme_joins(char32_t prev, char32_t next) {
  if (prev == U'\r' && next == U'\n') return true;
  if (next == U'\n' || next == U'\r' || prev == U'\n' || prev == U'\r') return false;
  if (prev == 0x200D) return true;
  if (is_extend(next)) return true;
  const Hangul a = hangul_type(prev);
  const Hangul b = hangul_type(next);
  if (a == Hangul::L &&
      (b == Hangul::L || b == Hangul::V || b == Hangul::LV || b == Hangul::LVT))
    return true;
  if ((a == Hangul::LV || a == Hangul::V) && (b == Hangul::V || b == Hangul::T)) return true;
  if ((a == Hangul::LVT || a == Hangul::T) && b == Hangul::T) return true;
  return false;
}

// Returns the byte offset one past the grapheme cluster starting at `pos`.
inline std::size_t next_grapheme(std::string_view s, std::size_t pos) {
  std::size_t p = pos;
  char32_t prev = decode(s, p);
  while (p < s.size()) {
    std::size_t q = p;
    const char32_t next = decode(s, q);
    if (!grapheme_joins(prev, next)) break;
    prev = next;
    p = q;
  }
  return p;
}

inline std::vector<std::string_view> graphemes(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t j = next_grapheme(s, i);
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::size_t grapheme_count(std::string_view s) {
  std::size_t n = 0, i = 0;
  while (i < s.size()) {
    i = next_grapheme(s, i);
    ++n;
  }
  return n;
}

}  // namespace kf::uni
