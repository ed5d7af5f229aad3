#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kf/categorize.hpp"
#include "kf/config.hpp"
#include "kf/dedup.hpp"
#include "kf/document.hpp"
#include "kf/jsonl.hpp"
#include "kf/pii.hpp"
#include "kf/report.hpp"
#include "kf/textclean.hpp"

// End-to-end corpus pass: clean -> redact -> dedup -> categorize, one
// output file per category plus a stats JSON. Per-document work is pure
// and runs on worker threads in fixed-size batches; results are reduced
// in input order and deduplication stays sequential, so output bytes are
// identical whatever --jobs says.

namespace kf::pipe {

struct PipelineStats {
  std::map<std::string, std::uint64_t> rule_hits;
  std::map<std::string, std::uint64_t> pii_counts;
  std::map<std::string, std::uint64_t> category_counts;
  std::uint64_t docs_in = 0;
  std::uint64_t docs_out = 0;
  std::uint64_t dropped = 0;
  std::uint64_t dedup_removed = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_after_clean = 0;
  std::uint64_t bytes_after_dedup = 0;
  std::uint64_t read_errors = 0;
  SourceReport report;
};

struct PipelineResult {
  int exit_code = 0;  // 0 clean, 1 sidecar errors present
  PipelineStats stats;
};

namespace detail {

// Pure per-document stage: clean, then detect and redact PII.
struct Transformed {
  Document doc;
  CleanOutcome outcome;
  std::vector<pii::PiiSpan> spans;
};

inline Transformed transform_one(Document doc, const cfg::PipelineConfig& config) {
  Transformed t;
  t.outcome = clean_document(doc, config.clean);
  if (t.outcome.disposition != Disposition::dropped && config.pii_enabled) {
    t.spans = pii::detect_pii(t.outcome.text);
    if (!t.spans.empty()) {
      t.outcome.text = pii::redact(t.outcome.text, t.spans, config.pii_policy);
      t.outcome.hits.emplace_back(RuleKind::pii, std::to_string(t.spans.size()) + " spans");
      doc.flags.insert(FlagKind::pii);
    }
  }
  t.doc = std::move(doc);
  return t;
}

inline void transform_batch(std::vector<Document>& batch, const cfg::PipelineConfig& config,
                            std::size_t jobs, std::vector<Transformed>& out) {
  out.clear();
  out.resize(batch.size());
  if (jobs <= 1 || batch.size() < 2) {
    for (std::size_t i = 0; i < batch.size(); ++i)
      out[i] = transform_one(std::move(batch[i]), config);
    return;
  }
  const std::size_t workers = std::min(jobs, batch.size());
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < batch.size(); i += workers)
        out[i] = transform_one(std::move(batch[i]), config);
    });
  }
  for (std::thread& t : threads) t.join();
}

}  // namespace detail

inline nlohmann::ordered_json stats_to_json(const PipelineStats& s) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["totals"] = {{"docs_in", s.docs_in},
                 {"docs_out", s.docs_out},
                 {"dropped", s.dropped},
                 {"dedup_removed", s.dedup_removed},
                 {"bytes_in", s.bytes_in},
                 {"bytes_after_clean", s.bytes_after_clean},
                 {"bytes_after_dedup", s.bytes_after_dedup},
                 {"read_errors", s.read_errors}};
  j["rule_hits"] = s.rule_hits;
  j["pii"] = s.pii_counts;
  j["categories"] = s.category_counts;
  j["report"] = report_to_json(s.report);
  return j;
}

inline PipelineResult run_pipeline(const cfg::PipelineConfig& config,
                                   const std::vector<std::filesystem::path>& inputs,
                                   const std::filesystem::path& outdir, std::size_t jobs) {
  std::filesystem::create_directories(outdir);
  const io::Format format = io::format_from_string(config.format);

  PipelineStats stats;
  for (const char* rule : {"empty", "spaces", "pii", "html", "dedup", "broken_markup", "short",
                           "repeats"})
    stats.rule_hits[rule] = 0;
  for (const char* kind : {"email", "phone_kr", "rrn", "url"}) stats.pii_counts[kind] = 0;
  for (const char* cat : {"trainable", "needs_context", "hate_flagged", "task_specific"})
    stats.category_counts[cat] = 0;

  std::map<Category, std::unique_ptr<io::DocumentWriter>> writers;
  for (const Category cat : {Category::trainable, Category::needs_context,
                             Category::hate_flagged, Category::task_specific})
    writers.emplace(cat, std::make_unique<io::DocumentWriter>(
                             outdir / (std::string(to_string(cat)) + ".jsonl")));

  SourceAccumulator sources;
  DedupSet seen;
  std::vector<io::ReadError> all_errors;
  const std::size_t batch_size = std::max<std::size_t>(64, 64 * std::max<std::size_t>(1, jobs));

  for (const auto& input : inputs) {
    io::DocumentReader reader(input, format);
    std::vector<Document> batch;
    std::vector<detail::Transformed> transformed;
    bool more = true;
    while (more) {
      batch.clear();
      while (batch.size() < batch_size) {
        auto d = reader.next();
        if (!d) {
          more = false;
          break;
        }
        batch.push_back(std::move(*d));
      }
      detail::transform_batch(batch, config, jobs, transformed);

      // Sequential reduce: order-sensitive state (dedup, writers, stats).
      for (detail::Transformed& t : transformed) {
        ++stats.docs_in;
        stats.bytes_in += t.doc.text.size();
        sources.add_in(t.doc.source, t.doc.text.size());

        for (const auto& [rule, _] : t.outcome.hits)
          ++stats.rule_hits[std::string(to_string(rule))];
        for (const auto& span : t.spans)
          ++stats.pii_counts[std::string(pii::to_string(span.kind))];

        if (t.outcome.disposition == Disposition::dropped) {
          ++stats.dropped;
          continue;
        }
        stats.bytes_after_clean += t.outcome.text.size();

        if (config.clean.dedup && !seen.insert(t.outcome.text)) {
          ++stats.dedup_removed;
          ++stats.rule_hits["dedup"];
          continue;
        }
        stats.bytes_after_dedup += t.outcome.text.size();

        const bool hate = flag_hate(t.outcome.text, config.hate_lexicon);
        const bool task = detect_task_data(t.doc, config.task_sources);
        if (hate) t.doc.flags.insert(FlagKind::hate);
        if (task) t.doc.flags.insert(FlagKind::task);

        Document out = std::move(t.doc);
        out.text = std::move(t.outcome.text);
        out.category = categorize(out, t.outcome, hate, task);
        ++stats.category_counts[std::string(to_string(*out.category))];

        sources.add_out(out.source, out.text.size());
        writers.at(*out.category)->write(out);
        ++stats.docs_out;
      }
    }
    for (const auto& e : reader.errors())
      all_errors.push_back({e.line_no, input.filename().string() + ": " + e.reason});
  }

  for (auto& [_, w] : writers) w->close();
  stats.read_errors = all_errors.size();
  stats.report = sources.finish();
  io::write_error_sidecar(outdir / "pipeline", all_errors);

  {
    std::ofstream out(outdir / "stats.json", std::ios::binary);
    out << stats_to_json(stats).dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write stats.json");
  }

  PipelineResult result;
  result.stats = std::move(stats);
  result.exit_code = all_errors.empty() ? 0 : 1;
  return result;
}

}  // namespace kf::pipe
