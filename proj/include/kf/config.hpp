#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kf/bpe.hpp"
#include "kf/jsonl.hpp"
#include "kf/pii.hpp"
#include "kf/segmenter.hpp"
#include "kf/textclean.hpp"

// Pipeline configuration file (JSON). Unknown keys are rejected with their
// full path: a typo like "min_char" silently reverting to a default is the
// kind of bug that only surfaces after a multi-day corpus run.

namespace kf::cfg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  int schema_version = 1;
  std::string format = "jsonl";  // corpus input format
  CleanConfig clean;
  bool pii_enabled = true;
  pii::Policy pii_policy = pii::Policy::placeholder;
  std::vector<std::string> task_sources;
  std::vector<std::string> hate_lexicon;
  std::size_t tok_vocab_size = 30003;
  std::vector<std::string> tok_specials = bpe::default_specials();
  seg::Segmenter segmenter;
  std::size_t tok_padding_multiple = 128;
  std::uint64_t plan_seq_len = 2048;
  std::size_t eval_k = 0;
  std::uint64_t eval_seed = 0;
  bool eval_normalize = false;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& path,
                           std::initializer_list<const char*> known) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown config key '" + path + key + "'");
  }
}

template <typename T>
void take(const nlohmann::json& obj, const char* key, T& out, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + path + key + "' has the wrong type");
  }
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  detail::reject_unknown(j, "", {"schema_version", "corpus_io", "textclean", "pii",
                                 "categorize", "tokenizer", "model_plan", "eval"});
  PipelineConfig c;
  detail::take(j, "schema_version", c.schema_version, "");
  if (c.schema_version != 1)
    throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));

  if (const auto it = j.find("corpus_io"); it != j.end()) {
    detail::reject_unknown(*it, "corpus_io.", {"format"});
    detail::take(*it, "format", c.format, "corpus_io.");
    try {
      io::format_from_string(c.format);  // validate
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("corpus_io.format: ") + e.what());
    }
  }

  if (const auto it = j.find("textclean"); it != j.end()) {
    detail::reject_unknown(*it, "textclean.",
                           {"min_chars", "max_run", "markup_ratio_threshold", "collapse_spaces",
                            "strip_tags", "dedup", "drop_short"});
    detail::take(*it, "min_chars", c.clean.min_chars, "textclean.");
    detail::take(*it, "max_run", c.clean.max_run, "textclean.");
    detail::take(*it, "markup_ratio_threshold", c.clean.markup_ratio_threshold, "textclean.");
    detail::take(*it, "collapse_spaces", c.clean.collapse_spaces, "textclean.");
    detail::take(*it, "strip_tags", c.clean.strip_tags, "textclean.");
    detail::take(*it, "dedup", c.clean.dedup, "textclean.");
    detail::take(*it, "drop_short", c.clean.drop_short, "textclean.");
    if (c.clean.max_run < 1) throw ConfigError("textclean.max_run must be >= 1");
    if (c.clean.markup_ratio_threshold < 0.0 || c.clean.markup_ratio_threshold > 1.0)
      throw ConfigError("textclean.markup_ratio_threshold must be in [0,1]");
  }

  if (const auto it = j.find("pii"); it != j.end()) {
    detail::reject_unknown(*it, "pii.", {"enabled", "policy"});
    detail::take(*it, "enabled", c.pii_enabled, "pii.");
    std::string policy = "placeholder";
    detail::take(*it, "policy", policy, "pii.");
    try {
      c.pii_policy = pii::policy_from_string(policy);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("pii.policy: ") + e.what());
    }
  }

  if (const auto it = j.find("categorize"); it != j.end()) {
    detail::reject_unknown(*it, "categorize.", {"task_sources", "hate_lexicon"});
    detail::take(*it, "task_sources", c.task_sources, "categorize.");
    detail::take(*it, "hate_lexicon", c.hate_lexicon, "categorize.");
  }

  if (const auto it = j.find("tokenizer"); it != j.end()) {
    detail::reject_unknown(*it, "tokenizer.",
                           {"vocab_size", "specials", "segmenter", "padding_multiple"});
    detail::take(*it, "vocab_size", c.tok_vocab_size, "tokenizer.");
    detail::take(*it, "specials", c.tok_specials, "tokenizer.");
    detail::take(*it, "padding_multiple", c.tok_padding_multiple, "tokenizer.");
    if (const auto sit = it->find("segmenter"); sit != it->end()) {
      detail::reject_unknown(*sit, "tokenizer.segmenter.", {"kind", "command"});
      std::string kind = "whitespace";
      detail::take(*sit, "kind", kind, "tokenizer.segmenter.");
      try {
        c.segmenter.kind = seg::kind_from_string(kind);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("tokenizer.segmenter.kind: ") + e.what());
      }
      detail::take(*sit, "command", c.segmenter.command, "tokenizer.segmenter.");
    }
    if (c.tok_vocab_size < 256 + c.tok_specials.size())
      throw ConfigError("tokenizer.vocab_size must be at least 256 + |specials|");
    if (c.tok_padding_multiple < 1) throw ConfigError("tokenizer.padding_multiple must be >= 1");
  }

  if (const auto it = j.find("model_plan"); it != j.end()) {
    detail::reject_unknown(*it, "model_plan.", {"seq_len"});
    detail::take(*it, "seq_len", c.plan_seq_len, "model_plan.");
    if (c.plan_seq_len == 0) throw ConfigError("model_plan.seq_len must be positive");
  }

  if (const auto it = j.find("eval"); it != j.end()) {
    detail::reject_unknown(*it, "eval.", {"k", "seed", "normalize"});
    detail::take(*it, "k", c.eval_k, "eval.");
    detail::take(*it, "seed", c.eval_seed, "eval.");
    detail::take(*it, "normalize", c.eval_normalize, "eval.");
  }

  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return parse_config(j);
}

}  // namespace kf::cfg
