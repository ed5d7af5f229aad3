#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kf/document.hpp"

// Per-source corpus accounting: bytes and document counts before and after
// the pipeline, plus the overall retention ratio.

namespace kf {

struct SourceRow {
  std::string source;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t docs_in = 0;
  std::uint64_t docs_out = 0;

  friend bool operator==(const SourceRow&, const SourceRow&) = default;
};

struct SourceReport {
  std::vector<SourceRow> rows;  // bytes_in descending, ties by source name
  double retention_ratio = 1.0;
};

// Builds a report incrementally so streaming callers never hold documents.
// Byte sizes count the UTF-8 text field only; metadata is bookkeeping, not
// corpus content.
class SourceAccumulator {
 public:
  void add_in(const std::string& source, std::uint64_t text_bytes) {
    auto& r = rows_[source];
    r.bytes_in += text_bytes;
    r.docs_in += 1;
  }

  void add_out(const std::string& source, std::uint64_t text_bytes) {
    auto& r = rows_[source];
    r.bytes_out += text_bytes;
    r.docs_out += 1;
  }

  SourceReport finish() const {
    SourceReport rep;
    std::uint64_t tin = 0, tout = 0;
    for (const auto& [name, agg] : rows_) {
      SourceRow row;
      row.source = name;
      row.bytes_in = agg.bytes_in;
      row.bytes_out = agg.bytes_out;
      row.docs_in = agg.docs_in;
      row.docs_out = agg.docs_out;
      rep.rows.push_back(std::move(row));
      tin += agg.bytes_in;
      tout += agg.bytes_out;
    }
    std::sort(rep.rows.begin(), rep.rows.end(), [](const SourceRow& a, const SourceRow& b) {
      if (a.bytes_in != b.bytes_in) return a.bytes_in > b.bytes_in;
      return a.source < b.source;
    });
    rep.retention_ratio = tin == 0 ? 1.0 : static_cast<double>(tout) / static_cast<double>(tin);
    return rep;
  }

 private:
  struct Agg {
    std::uint64_t bytes_in = 0, bytes_out = 0, docs_in = 0, docs_out = 0;
  };
  std::map<std::string, Agg> rows_;
};

inline SourceReport corpus_report(const std::vector<Document>& before,
                                  const std::vector<Document>& after) {
  SourceAccumulator acc;
  for (const auto& d : before) acc.add_in(d.source, d.text.size());
  for (const auto& d : after) acc.add_out(d.source, d.text.size());
  return acc.finish();
}

inline nlohmann::ordered_json report_to_json(const SourceReport& rep) {
  nlohmann::ordered_json j;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : rep.rows) {
    nlohmann::ordered_json row;
    row["source"] = r.source;
    row["bytes_in"] = r.bytes_in;
    row["bytes_out"] = r.bytes_out;
    row["docs_in"] = r.docs_in;
    row["docs_out"] = r.docs_out;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["retention_ratio"] = rep.retention_ratio;
  return j;
}

inline SourceReport report_from_json(const nlohmann::json& j) {
  SourceReport rep;
  for (const auto& row : j.at("rows")) {
    SourceRow r;
    r.source = row.at("source").get<std::string>();
    r.bytes_in = row.at("bytes_in").get<std::uint64_t>();
    r.bytes_out = row.at("bytes_out").get<std::uint64_t>();
    r.docs_in = row.at("docs_in").get<std::uint64_t>();
    r.docs_out = row.at("docs_out").get<std::uint64_t>();
    rep.rows.push_back(std::move(r));
  }
  rep.retention_ratio = j.value("retention_ratio", 1.0);
  return rep;
}

// Gigabytes to one decimal, decimal basis (1 GB = 1e9 bytes). Rows under
// one gigabyte render as "< 1.0" instead of a misleading 0.x figure.
inline std::string format_gb(std::uint64_t bytes) {
  const double gb = static_cast<double>(bytes) / 1e9;
  if (bytes > 0 && gb < 1.0) return "< 1.0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", gb);
  return buf;
}

// Plain-text source/size table, largest source first.
inline std::string render_table(const SourceReport& rep) {
  std::size_t name_w = 6;  // "Source"
  for (const auto& r : rep.rows) name_w = std::max(name_w, r.source.size());
  std::string out;
  const auto pad = [](std::string s, std::size_t w) {
    while (s.size() < w) s.push_back(' ');
    return s;
  };
  out += pad("Source", name_w) + "  Size (GB)\n";
  out += std::string(name_w + 11, '-') + "\n";
  for (const auto& r : rep.rows) {
    std::string size = format_gb(r.bytes_in);
    out += pad(r.source, name_w) + "  " + size + "\n";
  }
  char ratio[64];
  std::snprintf(ratio, sizeof ratio, "retention: %.3f", rep.retention_ratio);
  out += ratio;
  out += "\n";
  return out;
}

}  // namespace kf
