#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace kf {

// Flags attached by analysis stages; ingestion never sets them.
enum class FlagKind { hate, task, pii };

// The four routing buckets for cleaned documents.
enum class Category { trainable, needs_context, hate_flagged, task_specific };

// Quality rules a document can trip during cleaning.
enum class RuleKind {
  empty,
  spaces,
  pii,
  html,
  dedup,
  broken_markup,
  short_text,
  repeats,
};

inline std::string_view to_string(FlagKind f) {
  switch (f) {
    case FlagKind::hate: return "hate";
    case FlagKind::task: return "task";
    case FlagKind::pii: return "pii";
  }
  return "?";
}

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::trainable: return "trainable";
    case Category::needs_context: return "needs_context";
    case Category::hate_flagged: return "hate_flagged";
    case Category::task_specific: return "task_specific";
  }
  return "?";
}

inline std::string_view to_string(RuleKind r) {
  switch (r) {
    case RuleKind::empty: return "empty";
    case RuleKind::spaces: return "spaces";
    case RuleKind::pii: return "pii";
    case RuleKind::html: return "html";
    case RuleKind::dedup: return "dedup";
    case RuleKind::broken_markup: return "broken_markup";
    case RuleKind::short_text: return "short";
    case RuleKind::repeats: return "repeats";
  }
  return "?";
}

inline std::optional<FlagKind> flag_from_string(std::string_view s) {
  if (s == "hate") return FlagKind::hate;
  if (s == "task") return FlagKind::task;
  if (s == "pii") return FlagKind::pii;
  return std::nullopt;
}

inline std::optional<Category> category_from_string(std::string_view s) {
  if (s == "trainable") return Category::trainable;
  if (s == "needs_context") return Category::needs_context;
  if (s == "hate_flagged") return Category::hate_flagged;
  if (s == "task_specific") return Category::task_specific;
  return std::nullopt;
}

// One corpus record. `text` must be valid UTF-8; ids are unique within a
// corpus file. flags/category stay empty until analysis stages run.
struct Document {
  std::string id;
  std::string source;
  std::string text;
  std::map<std::string, std::string> meta;
  std::set<FlagKind> flags;
  std::optional<Category> category;

  friend bool operator==(const Document&, const Document&) = default;
};

// ordered_json keeps insertion order, so serialized documents are stable
// byte-for-byte across runs. Optional fields are omitted when empty.
inline nlohmann::ordered_json to_json(const Document& d) {
  nlohmann::ordered_json j;
  j["id"] = d.id;
  j["source"] = d.source;
  j["text"] = d.text;
  if (!d.meta.empty()) j["meta"] = d.meta;
  if (!d.flags.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const FlagKind f : d.flags) arr.push_back(std::string(to_string(f)));
    j["flags"] = std::move(arr);
  }
  if (d.category) j["category"] = std::string(to_string(*d.category));
  return j;
}

// Throws std::runtime_error with a human-readable reason; callers turn
// that into a sidecar entry.
inline Document document_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("record is not a JSON object");
  Document d;
  for (const char* key : {"id", "source", "text"}) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
      throw std::runtime_error(std::string("missing or non-string field '") + key + "'");
  }
  d.id = j.at("id").get<std::string>();
  d.source = j.at("source").get<std::string>();
  d.text = j.at("text").get<std::string>();
  if (d.id.empty()) throw std::runtime_error("empty id");
  if (auto it = j.find("meta"); it != j.end()) {
    if (!it->is_object()) throw std::runtime_error("meta is not an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw std::runtime_error("meta value for '" + k + "' is not a string");
      d.meta[k] = v.get<std::string>();
    }
  }
  if (auto it = j.find("flags"); it != j.end()) {
    if (!it->is_array()) throw std::runtime_error("flags is not an array");
    for (const auto& v : *it) {
      if (!v.is_string()) throw std::runtime_error("flag entry is not a string");
      const auto f = flag_from_string(v.get<std::string>());
      if (!f) throw std::runtime_error("unknown flag '" + v.get<std::string>() + "'");
      d.flags.insert(*f);
    }
  }
  if (auto it = j.find("category"); it != j.end()) {
    if (!it->is_string()) throw std::runtime_error("category is not a string");
    const auto c = category_from_string(it->get<std::string>());
    if (!c) throw std::runtime_error("unknown category '" + it->get<std::string>() + "'");
    d.category = *c;
  }
  return d;
}

}  // namespace kf
