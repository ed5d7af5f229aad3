#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kf/unicode.hpp"

// Personally identifiable information: emails, Korean phone numbers,
// resident registration numbers, URLs. Scanners are hand-rolled byte
// scanners rather than std::regex, because the digit patterns need
// lookaround-style boundary checks (no digit touching either end of a
// match) that std::regex cannot express.

namespace kf::pii {

enum class PiiKind { email, phone_kr, rrn, url };

inline std::string_view to_string(PiiKind k) {
  switch (k) {
    case PiiKind::email: return "email";
    case PiiKind::phone_kr: return "phone_kr";
    case PiiKind::rrn: return "rrn";
    case PiiKind::url: return "url";
  }
  return "?";
}

struct PiiSpan {
  std::size_t start = 0;  // byte offsets into the scanned text
  std::size_t end = 0;
  PiiKind kind = PiiKind::email;
  std::string replacement;

  friend bool operator==(const PiiSpan&, const PiiSpan&) = default;
};

inline std::string_view placeholder(PiiKind k) {
  switch (k) {
    case PiiKind::email: return "<|email|>";
    case PiiKind::phone_kr: return "<|phone|>";
    case PiiKind::rrn: return "<|rrn|>";
    case PiiKind::url: return "<|url|>";
  }
  return "<|pii|>";
}

// Weighted checksum over the first 12 digits; the 13th is the check digit.
inline bool rrn_checksum_valid(std::string_view digits) {
  if (digits.size() != 13) throw std::invalid_argument("RRN must be exactly 13 digits");
  static constexpr int kWeights[12] = {2, 3, 4, 5, 6, 7, 8, 9, 2, 3, 4, 5};
  int sum = 0;
  for (std::size_t i = 0; i < 13; ++i) {
    if (digits[i] < '0' || digits[i] > '9')
      throw std::invalid_argument("RRN must be exactly 13 digits");
    if (i < 12) sum += (digits[i] - '0') * kWeights[i];
  }
  const int check = (11 - (sum % 11)) % 10;
  return digits[12] - '0' == check;
}

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }
inline bool is_local_char(char c) {
  return is_alnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
}
inline bool is_label_char(char c) { return is_alnum(c) || c == '-'; }
inline bool is_scheme_char(char c) {
  return is_alnum(c) || c == '+' || c == '.' || c == '-';
}
inline bool is_sep(char c) { return c == '-' || c == '.' || c == ' '; }

inline bool digit_before(std::string_view t, std::size_t i) {
  return i > 0 && is_digit(t[i - 1]);
}
inline bool digit_after(std::string_view t, std::size_t i) {
  return i < t.size() && is_digit(t[i]);
}

// local@label(.label)+ with an all-alpha final label of length >= 2. The
// domain backtracks label by label so "a@b.com.x1" still yields "a@b.com".
inline void scan_emails(std::string_view t, std::vector<PiiSpan>& out) {
  for (std::size_t at = 0; at < t.size(); ++at) {
    if (t[at] != '@') continue;
    std::size_t lo = at;
    while (lo > 0 && is_local_char(t[lo - 1])) --lo;
    if (lo == at) continue;
    // label boundaries after '@'
    std::size_t p = at + 1;
    std::vector<std::size_t> label_ends;
    while (p < t.size()) {
      std::size_t q = p;
      while (q < t.size() && is_label_char(t[q])) ++q;
      if (q == p) break;
      label_ends.push_back(q);
      if (q < t.size() && t[q] == '.')
        p = q + 1;
      else
        break;
    }
    for (std::size_t k = label_ends.size(); k-- > 1;) {
      const std::size_t end = label_ends[k];
      std::size_t lb = end;
      while (lb > at + 1 && is_label_char(t[lb - 1])) --lb;
      const std::size_t len = end - lb;
      bool alpha = len >= 2;
      for (std::size_t j = lb; alpha && j < end; ++j) alpha = is_alpha(t[j]);
      if (alpha) {
        out.push_back({lo, end, PiiKind::email, {}});
        break;
      }
    }
  }
}

// 0 + 1-2 digits, optional [-. ], 3-4 digits, optional [-. ], 4 digits.
// Digit boundaries on both ends keep matches out of longer digit runs.
inline void scan_phones(std::string_view t, std::vector<PiiSpan>& out) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != '0' || digit_before(t, i)) continue;
    std::size_t best = 0;
    for (int lead : {2, 1}) {
      std::size_t p = i + 1;
      for (int k = 0; k < lead; ++k, ++p)
        if (p >= t.size() || !is_digit(t[p])) goto next_lead;
      {
        const std::size_t after_lead = p;
        for (int sep1 : {1, 0}) {
          std::size_t q = after_lead;
          if (sep1) {
            if (q >= t.size() || !is_sep(t[q])) continue;
            ++q;
          }
          for (int mid : {4, 3}) {
            std::size_t r = q;
            bool ok = true;
            for (int k = 0; k < mid; ++k, ++r)
              if (r >= t.size() || !is_digit(t[r])) { ok = false; break; }
            if (!ok) continue;
            for (int sep2 : {1, 0}) {
              std::size_t s = r;
              if (sep2) {
                if (s >= t.size() || !is_sep(t[s])) continue;
                ++s;
              }
              std::size_t e = s;
              bool ok4 = true;
              for (int k = 0; k < 4; ++k, ++e)
                if (e >= t.size() || !is_digit(t[e])) { ok4 = false; break; }
              if (!ok4 || digit_after(t, e)) continue;
              best = std::max(best, e - i);
            }
          }
        }
      }
    next_lead:;
    }
    if (best > 0) out.push_back({i, i + best, PiiKind::phone_kr, {}});
  }
}

// 6 digits, '-', 7 digits, checksum-valid, digit boundaries on both ends.
inline void scan_rrns(std::string_view t, std::vector<PiiSpan>& out) {
  if (t.size() < 14) return;
  for (std::size_t i = 0; i + 14 <= t.size(); ++i) {
    if (digit_before(t, i) || t[i + 6] != '-') continue;
    bool ok = true;
    std::string digits;
    digits.reserve(13);
    for (std::size_t k = 0; ok && k < 14; ++k) {
      if (k == 6) continue;
      if (!is_digit(t[i + k])) ok = false;
      else digits.push_back(t[i + k]);
    }
    if (!ok || digit_after(t, i + 14)) continue;
    if (rrn_checksum_valid(digits)) out.push_back({i, i + 14, PiiKind::rrn, {}});
  }
}

// scheme://host-and-path up to whitespace/quote/angle/non-ASCII, with
// trailing sentence punctuation trimmed off.
inline void scan_urls(std::string_view t, std::vector<PiiSpan>& out) {
  for (std::size_t i = 0; i + 2 < t.size(); ++i) {
    if (!(t[i] == ':' && t[i + 1] == '/' && t[i + 2] == '/')) continue;
    std::size_t lo = i;
    while (lo > 0 && is_scheme_char(t[lo - 1])) --lo;
    while (lo < i && !is_alpha(t[lo])) ++lo;
    if (lo == i) continue;
    std::size_t e = i + 3;
    while (e < t.size()) {
      const unsigned char c = t[e];
      if (c >= 0x80 || uni::is_ascii_space(static_cast<char>(c)) || c == '<' || c == '>' ||
          c == '"')
        break;
      ++e;
    }
    while (e > i + 3 && (t[e - 1] == '.' || t[e - 1] == ',' || t[e - 1] == ';' ||
                         t[e - 1] == ':' || t[e - 1] == '!' || t[e - 1] == '?'))
      --e;
    if (e == i + 3) continue;
    out.push_back({lo, e, PiiKind::url, {}});
  }
}

}  // namespace detail

// All candidate matches, overlaps resolved longest-match-first, then
// leftmost; result sorted by start offset and non-overlapping.
inline std::vector<PiiSpan> detect_pii(std::string_view text) {
  std::vector<PiiSpan> cand;
  detail::scan_emails(text, cand);
  detail::scan_phones(text, cand);
  detail::scan_rrns(text, cand);
  detail::scan_urls(text, cand);
  std::sort(cand.begin(), cand.end(), [](const PiiSpan& a, const PiiSpan& b) {
    const auto la = a.end - a.start, lb = b.end - b.start;
    if (la != lb) return la > lb;
    if (a.start != b.start) return a.start < b.start;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  std::vector<PiiSpan> chosen;
  for (const PiiSpan& c : cand) {
    bool overlaps = false;
    for (const PiiSpan& s : chosen)
      if (c.start < s.end && s.start < c.end) {
        overlaps = true;
        break;
      }
    if (!overlaps) chosen.push_back(c);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const PiiSpan& a, const PiiSpan& b) { return a.start < b.start; });
  for (PiiSpan& s : chosen) s.replacement = std::string(placeholder(s.kind));
  return chosen;
}

enum class Policy { placeholder, mask };

inline Policy policy_from_string(std::string_view s) {
  if (s == "placeholder") return Policy::placeholder;
  if (s == "mask") return Policy::mask;
  throw std::invalid_argument("unknown pii policy '" + std::string(s) + "'");
}

// Bytes outside the spans are copied through untouched. mask substitutes
// one '*' per code point so the visual width stays roughly put.
inline std::string redact(std::string_view text, const std::vector<PiiSpan>& spans,
                          Policy policy) {
  std::size_t prev_end = 0;
  for (const PiiSpan& s : spans) {
    if (s.start >= s.end || s.end > text.size() || s.start < prev_end)
      throw std::invalid_argument("spans must be sorted, non-overlapping, in range");
    prev_end = s.end;
  }
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  for (const PiiSpan& s : spans) {
    out.append(text.substr(pos, s.start - pos));
    if (policy == Policy::placeholder)
      out.append(placeholder(s.kind));
    else
      out.append(uni::code_point_count(text.substr(s.start, s.end - s.start)), '*');
    pos = s.end;
  }
  out.append(text.substr(pos));
  return out;
}

}  // namespace kf::pii
