#pragma once

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kf/unicode.hpp"

// Pre-segmentation for merge-boundary control in the tokenizer. The
// whitespace segmenter needs no external tooling; the external-command
// adapter runs a morphological analyzer (MeCab or anything with the same
// one-segment-per-line contract) as a child process, so the core stays
// free of analyzer dependencies and tests can substitute a stub.

namespace kf::seg {

enum class Kind { whitespace, external_command };

struct Segmenter {
  Kind kind = Kind::whitespace;
  std::string command;  // external_command only
};

struct Piece {
  std::string text;
  bool is_separator = false;

  friend bool operator==(const Piece&, const Piece&) = default;
};

struct SegmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ASCII whitespace runs become separator pieces; everything between them
// is content. Concatenating the pieces reproduces the input byte-for-byte.
inline std::vector<Piece> segment_whitespace(std::string_view text) {
  std::vector<Piece> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const bool ws = uni::is_ascii_space(text[i]);
    std::size_t j = i;
    while (j < text.size() && uni::is_ascii_space(text[j]) == ws) ++j;
    out.push_back({std::string(text.substr(i, j - i)), ws});
    i = j;
  }
  return out;
}

namespace detail {

// Runs `command` with `input` on stdin, captures stdout. Temp files plus
// std::system keep this portable without pulling in a process library.
inline std::optional<std::string> run_command(const std::string& command,
                                              std::string_view input) {
  static std::size_t counter = 0;
  const auto dir = std::filesystem::temp_directory_path();
  const std::string stem =
      "kf-seg-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const auto in_path = dir / (stem + ".in");
  const auto out_path = dir / (stem + ".out");
  {
    std::ofstream in(in_path, std::ios::binary);
    in.write(input.data(), static_cast<std::streamsize>(input.size()));
    if (!in) return std::nullopt;
  }
  const std::string cmd = command + " < '" + in_path.string() + "' > '" + out_path.string() +
                          "' 2> /dev/null";
  const int rc = std::system(cmd.c_str());
  std::string output;
  if (rc == 0) {
    std::ifstream out(out_path, std::ios::binary);
    std::ostringstream buf;
    buf << out.rdbuf();
    output = buf.str();
  }
  std::error_code ec;
  std::filesystem::remove(in_path, ec);
  std::filesystem::remove(out_path, ec);
  if (rc != 0) return std::nullopt;
  return output;
}

}  // namespace detail

// External contract: the command reads the full text on stdin and emits
// one segment per line. Segments must reappear in the original text in
// order; bytes the analyzer skipped (whitespace, newlines) are restored
// as separator pieces so the pieces always concatenate back to the input.
// Any violation throws SegmentError; callers may fall back to whitespace.
inline std::vector<Piece> segment_external(std::string_view text, const std::string& command) {
  const auto output = detail::run_command(command, text);
  if (!output) throw SegmentError("segmenter command failed: " + command);

  std::vector<Piece> out;
  std::size_t pos = 0;
  std::istringstream lines{*output};
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t at = text.find(line, pos);
    if (at == std::string_view::npos)
      throw SegmentError("segment not found in input: '" + line + "'");
    if (at > pos) out.push_back({std::string(text.substr(pos, at - pos)), true});
    out.push_back({line, false});
    pos = at + line.size();
  }
  if (pos < text.size()) out.push_back({std::string(text.substr(pos)), true});

  std::string rebuilt;
  for (const Piece& p : out) rebuilt += p.text;
  if (rebuilt != text) throw SegmentError("segmenter output does not reconstruct input");
  return out;
}

inline std::vector<Piece> segment(std::string_view text, const Segmenter& seg) {
  if (text.empty()) return {};
  if (seg.kind == Kind::whitespace) return segment_whitespace(text);
  return segment_external(text, seg.command);
}

// Fallback wrapper: external failures degrade to whitespace segmentation
// instead of aborting a long pipeline run. `fell_back`, when given, is set
// so callers can report it.
inline std::vector<Piece> segment_or_fallback(std::string_view text, const Segmenter& seg,
                                              bool* fell_back = nullptr) {
  if (fell_back) *fell_back = false;
  if (seg.kind == Kind::whitespace) return segment_whitespace(text);
  try {
    return segment(text, seg);
  } catch (const SegmentError&) {
    if (fell_back) *fell_back = true;
    return segment_whitespace(text);
  }
}

inline Kind kind_from_string(std::string_view s) {
  if (s == "whitespace") return Kind::whitespace;
  if (s == "external_command" || s == "external") return Kind::external_command;
  throw std::invalid_argument("unknown segmenter kind '" + std::string(s) + "'");
}

inline std::string_view to_string(Kind k) {
  return k == Kind::whitespace ? "whitespace" : "external_command";
}

}  // namespace kf::seg
