#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kf/document.hpp"
#include "kf/unicode.hpp"

// Quality filters for web-scraped text. Each filter either leaves the text
// alone or strictly shrinks it, and clean_document() iterates the mutating
// filters to a fixed point, so cleaning an already-clean document is a
// no-op. Newlines are load-bearing document structure and are never
// deleted by whitespace handling.

namespace kf {

struct CleanConfig {
  std::size_t min_chars = 64;           // grapheme clusters
  std::size_t max_run = 3;              // longest allowed grapheme repeat
  double markup_ratio_threshold = 0.30;
  bool collapse_spaces = true;
  bool strip_tags = true;
  bool dedup = true;
  bool drop_short = false;  // route short docs by default instead of dropping
};

enum class Disposition { kept, dropped, routed_needs_context };

struct CleanOutcome {
  Disposition disposition = Disposition::kept;
  std::string text;
  std::vector<std::pair<RuleKind, std::string>> hits;
};

inline bool is_empty(std::string_view text) { return uni::trim_ascii(text).empty(); }

// Collapses runs of two or more spaces/tabs inside a line to one space and
// drops leading/trailing space/tab per line. A lone tab survives as-is.
// '\n' and '\r' are line structure, never touched.
inline std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t run_start = 0, run_len = 0;
  bool line_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == ' ' || c == '\t') {
      if (run_len == 0) run_start = i;
      ++run_len;
      continue;
    }
    if (c == '\n' || c == '\r') {
      run_len = 0;  // trailing run dropped
      line_has_content = false;
      out.push_back(c);
      continue;
    }
    if (run_len > 0) {
      if (line_has_content) out.push_back(run_len == 1 ? text[run_start] : ' ');
      run_len = 0;
    }
    out.push_back(c);
    line_has_content = true;
  }
  return out;
}

namespace detail {

// Decodes one entity starting at text[i] (which is '&'). On success writes
// the decoded code point and the span length; otherwise leaves the text for
// the caller to copy through.
inline bool decode_entity(std::string_view text, std::size_t i, char32_t& cp, std::size_t& len) {
  const std::size_t semi = text.find(';', i + 1);
  if (semi == std::string_view::npos || semi == i + 1 || semi - i > 12) return false;
  const std::string_view body = text.substr(i + 1, semi - i - 1);
  len = semi - i + 1;
  if (body == "amp") { cp = U'&'; return true; }
  if (body == "lt") { cp = U'<'; return true; }
  if (body == "gt") { cp = U'>'; return true; }
  if (body == "quot") { cp = U'"'; return true; }
  if (body.size() >= 2 && body[0] == '#') {
    std::uint32_t v = 0;
    bool hex = body[1] == 'x' || body[1] == 'X';
    std::size_t k = hex ? 2 : 1;
    if (k >= body.size()) return false;
    for (; k < body.size(); ++k) {
      const char c = body[k];
      std::uint32_t digit;
      if (c >= '0' && c <= '9') digit = std::uint32_t(c - '0');
      else if (hex && c >= 'a' && c <= 'f') digit = std::uint32_t(c - 'a' + 10);
      else if (hex && c >= 'A' && c <= 'F') digit = std::uint32_t(c - 'A' + 10);
      else return false;
      v = v * (hex ? 16 : 10) + digit;
      if (v > 0x10FFFF) return false;
    }
    if (v >= 0xD800 && v <= 0xDFFF) return false;
    cp = v;
    return true;
  }
  return false;
}

inline bool tag_opener(std::string_view text, std::size_t i) {
  if (text[i] != '<' || i + 1 >= text.size()) return false;
  const char c = text[i + 1];
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '/' || c == '!';
}

// Span of a single-line tag token starting at text[i], or 0 if unterminated.
inline std::size_t tag_span(std::string_view text, std::size_t i) {
  for (std::size_t j = i + 1; j < text.size(); ++j) {
    if (text[j] == '>') return j - i + 1;
    if (text[j] == '\n' || text[j] == '\r') return 0;
  }
  return 0;
}

}  // namespace detail

// Removes well-formed single-line tag tokens, then decodes the standard
// named entities and numeric character references. Malformed fragments
// ('<' with no closing '>', unknown entities) stay in place; they are
// detect_broken_markup's business.
inline std::string strip_html(std::string_view text) {
  std::string pass1;
  pass1.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (detail::tag_opener(text, i)) {
      if (const std::size_t span = detail::tag_span(text, i); span > 0) {
        i += span;
        continue;
      }
    }
    pass1.push_back(text[i]);
    ++i;
  }
  std::string out;
  out.reserve(pass1.size());
  for (std::size_t i = 0; i < pass1.size();) {
    if (pass1[i] == '&') {
      char32_t cp;
      std::size_t len;
      if (detail::decode_entity(pass1, i, cp, len)) {
        uni::append(out, cp);
        i += len;
        continue;
      }
    }
    out.push_back(pass1[i]);
    ++i;
  }
  return out;
}

// Fraction of bytes sitting in markup-like spans: brace/bracket/pipe/backtick
// punctuation, entity-shaped '&…;' runs, and '<…' fragments with no closing
// '>' on the same line. A well-formed tag is skipped whole; strip_html owns
// those, so they do not count as damage here.
inline std::pair<bool, double> detect_broken_markup(std::string_view text, double threshold) {
  if (text.empty()) return {false, 0.0};
  std::size_t markup = 0;
  std::size_t i = 0;
  const auto entity_span = [&](std::size_t at) -> std::size_t {
    std::size_t j = at + 1;
    while (j < text.size() && j - at <= 9) {  // body of 1..8 chars plus ';'
      const char c = text[j];
      if (c == ';') return j - at + 1;
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '#';
      if (!ok) return 0;
      ++j;
    }
    return 0;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '{' || c == '}' || c == '[' || c == ']' || c == '|' || c == '`') {
      ++markup;
      ++i;
      continue;
    }
    if (c == '&') {
      if (const std::size_t span = entity_span(i); span >= 3) {
        markup += span;
        i += span;
        continue;
      }
      ++i;
      continue;
    }
    if (detail::tag_opener(text, i)) {
      if (const std::size_t span = detail::tag_span(text, i); span > 0) {
        i += span;  // intact tag, not damage
        continue;
      }
      std::size_t j = i;
      while (j < text.size() && text[j] != '\n' && text[j] != '\r') ++j;
      markup += j - i;
      i = j;
      continue;
    }
    ++i;
  }
  const double ratio = static_cast<double>(markup) / static_cast<double>(text.size());
  return {ratio > threshold, ratio};
}

// Truncates any run of the same grapheme cluster to max_run repetitions.
inline std::string collapse_repeats(std::string_view text, std::size_t max_run) {
  std::string out;
  out.reserve(text.size());
  std::string_view prev;
  std::size_t run = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t j = uni::next_grapheme(text, i);
    const std::string_view g = text.substr(i, j - i);
    run = (g == prev) ? run + 1 : 1;
    if (run <= max_run) out += g;
    prev = g;
    i = j;
  }
  return out;
}

inline bool is_too_short(std::string_view text, std::size_t min_chars) {
  return uni::grapheme_count(text) < min_chars;
}

// Runs the mutating filters to a fixed point, then decides disposition.
// Every pass strictly shrinks the text or leaves it unchanged, so the loop
// terminates; the fixed point is what makes cleaning idempotent even for
// pathological inputs (nested escapes, entities assembled by truncation).
inline CleanOutcome clean_document(const Document& doc, const CleanConfig& cfg) {
  CleanOutcome out;
  std::string text = doc.text;

  const auto add_hit = [&](RuleKind rule, std::string detail) {
    for (const auto& [r, d] : out.hits)
      if (r == rule) return;
    out.hits.emplace_back(rule, std::move(detail));
  };

  for (;;) {
    bool changed = false;
    if (cfg.strip_tags) {
      std::string t = strip_html(text);
      if (t != text) {
        add_hit(RuleKind::html, "tags or entities removed");
        text = std::move(t);
        changed = true;
      }
    }
    if (cfg.collapse_spaces) {
      std::string t = normalize_whitespace(text);
      if (t != text) {
        add_hit(RuleKind::spaces, "whitespace normalized");
        text = std::move(t);
        changed = true;
      }
    }
    {
      std::string t = collapse_repeats(text, cfg.max_run);
      if (t != text) {
        add_hit(RuleKind::repeats, "repeated graphemes truncated");
        text = std::move(t);
        changed = true;
      }
    }
    if (!changed) break;
  }

  if (is_empty(text)) {
    add_hit(RuleKind::empty, "no content");
    out.disposition = Disposition::dropped;
    out.text.clear();
    return out;
  }
  if (const auto [broken, ratio] = detect_broken_markup(text, cfg.markup_ratio_threshold);
      broken) {
    add_hit(RuleKind::broken_markup, "markup ratio " + std::to_string(ratio));
    out.disposition = Disposition::dropped;
    out.text.clear();
    return out;
  }
  if (is_too_short(text, cfg.min_chars)) {
    add_hit(RuleKind::short_text,
            std::to_string(uni::grapheme_count(text)) + " graphemes < " +
                std::to_string(cfg.min_chars));
    if (cfg.drop_short) {
      out.disposition = Disposition::dropped;
      out.text.clear();
    } else {
      out.disposition = Disposition::routed_needs_context;
      out.text = std::move(text);
    }
    return out;
  }
  out.disposition = Disposition::kept;
  out.text = std::move(text);
  return out;
}

}  // namespace kf
