#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kf/document.hpp"
#include "kf/textclean.hpp"
#include "kf/unicode.hpp"

// Routing buckets for cleaned documents. Hate beats task beats
// needs-context beats trainable, so flagged content can never slip into
// the default training bucket by arriving in a different order.

namespace kf {

// Case-insensitive (ASCII fold) substring match after NFC, so composed and
// decomposed spellings of the same Korean word hit the same entry. Empty
// lexicon flags nothing; none ships with the tool.
inline bool flag_hate(std::string_view text, const std::vector<std::string>& lexicon) {
  if (lexicon.empty()) return false;
  const std::string folded = uni::ascii_lower(uni::nfc(text));
  for (const std::string& entry : lexicon) {
    if (entry.empty()) continue;
    const std::string needle = uni::ascii_lower(uni::nfc(entry));
    if (folded.find(needle) != std::string::npos) return true;
  }
  return false;
}

// Task data is identified by provenance: a known task-dataset source name
// or an explicit "task" metadata key.
inline bool detect_task_data(const Document& doc, const std::vector<std::string>& task_sources) {
  for (const std::string& s : task_sources)
    if (doc.source == s) return true;
  return doc.meta.contains("task");
}

inline Category categorize(const Document&, const CleanOutcome& outcome, bool hate, bool task) {
  if (hate) return Category::hate_flagged;
  if (task) return Category::task_specific;
  if (outcome.disposition == Disposition::routed_needs_context) return Category::needs_context;
  return Category::trainable;
}

}  // namespace kf
