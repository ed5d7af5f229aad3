#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kf/document.hpp"
#include "kf/unicode.hpp"

// Streaming document I/O. Readers hold one line in memory at a time, so
// peak memory tracks the largest single document, not the file. Bad lines
// go to a "<output>.errors.jsonl" sidecar and never abort the stream.

namespace kf::io {

enum class Format { jsonl, plain_text };

inline Format format_from_string(std::string_view s) {
  if (s == "jsonl") return Format::jsonl;
  if (s == "plain_text" || s == "text" || s == "txt") return Format::plain_text;
  throw std::invalid_argument("unknown format '" + std::string(s) + "'");
}

struct ReadError {
  std::size_t line_no = 0;  // 1-based line in the source file
  std::string reason;
};

class DocumentReader {
 public:
  DocumentReader(const std::filesystem::path& path, Format format)
      : path_(path), format_(format), in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open " + path.string());
  }

  // Next document, or nullopt at end of file. Malformed lines are pushed
  // onto errors() and skipped.
  std::optional<Document> next() {
    return format_ == Format::jsonl ? next_jsonl() : next_plain();
  }

  const std::vector<ReadError>& errors() const { return errors_; }

 private:
  std::optional<Document> next_jsonl() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (uni::trim_ascii(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (j.is_discarded()) {
        errors_.push_back({line_no_, "invalid JSON"});
        continue;
      }
      try {
        Document d = document_from_json(j);
        if (!uni::is_valid_utf8(d.text)) {
          errors_.push_back({line_no_, "text is not valid UTF-8"});
          continue;
        }
        return d;
      } catch (const std::exception& e) {
        errors_.push_back({line_no_, e.what()});
      }
    }
    return std::nullopt;
  }

  // plain_text: blank lines delimit documents; ids are "<filename>#<n>".
  std::optional<Document> next_plain() {
    std::string block;
    std::string line;
    bool any = false;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (uni::trim_ascii(line).empty()) {
        if (any) break;
        continue;
      }
      if (any) block.push_back('\n');
      block += line;
      any = true;
    }
    if (!any) return std::nullopt;
    ++block_no_;
    if (!uni::is_valid_utf8(block)) {
      errors_.push_back({line_no_, "text is not valid UTF-8"});
      return next_plain();
    }
    Document d;
    d.id = path_.filename().string() + "#" + std::to_string(block_no_);
    d.source = path_.filename().string();
    d.text = std::move(block);
    return d;
  }

  std::filesystem::path path_;
  Format format_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::size_t block_no_ = 0;
  std::vector<ReadError> errors_;
};

// Writes JSONL atomically: data goes to "<path>.partial" and is renamed
// into place on success, so a crash never leaves a half-written corpus
// under the target name.
class DocumentWriter {
 public:
  explicit DocumentWriter(const std::filesystem::path& path)
      : path_(path), tmp_(path.string() + ".partial"), out_(tmp_, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + tmp_.string() + " for writing");
  }

  ~DocumentWriter() {
    if (!closed_) abort_write();
  }

  DocumentWriter(const DocumentWriter&) = delete;
  DocumentWriter& operator=(const DocumentWriter&) = delete;

  void write(const Document& d) {
    out_ << to_json(d).dump() << '\n';
    if (!out_) throw std::runtime_error("write failed on " + tmp_.string());
    ++count_;
  }

  // Flushes and renames into place. Returns documents written.
  std::size_t close() {
    out_.flush();
    const bool ok = static_cast<bool>(out_);
    out_.close();
    if (!ok) {
      abort_write();
      throw std::runtime_error("flush failed on " + tmp_.string());
    }
    std::filesystem::rename(tmp_, path_);
    closed_ = true;
    return count_;
  }

  std::size_t count() const { return count_; }

 private:
  void abort_write() {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
    closed_ = true;
  }

  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  std::size_t count_ = 0;
  bool closed_ = false;
};

inline void write_error_sidecar(const std::filesystem::path& output,
                                const std::vector<ReadError>& errors) {
  const auto side = output.string() + ".errors.jsonl";
  if (errors.empty()) {
    std::error_code ec;
    std::filesystem::remove(side, ec);
    return;
  }
  std::ofstream out(side, std::ios::binary);
  for (const auto& e : errors) {
    nlohmann::ordered_json j;
    j["line_no"] = e.line_no;
    j["reason"] = e.reason;
    out << j.dump() << '\n';
  }
}

// Convenience: drain a generator into a file. `next` returns nullopt when
// the stream is exhausted.
inline std::size_t write_documents(const std::function<std::optional<Document>()>& next,
                                   const std::filesystem::path& path) {
  DocumentWriter w(path);
  while (auto d = next()) w.write(*d);
  return w.close();
}

inline std::vector<Document> read_all(const std::filesystem::path& path, Format format,
                                      std::vector<ReadError>* errors = nullptr) {
  DocumentReader r(path, format);
  std::vector<Document> docs;
  while (auto d = r.next()) docs.push_back(std::move(*d));
  if (errors) *errors = r.errors();
  return docs;
}

}  // namespace kf::io
