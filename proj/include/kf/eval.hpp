#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kf/hash.hpp"
#include "kf/unicode.hpp"

// Few-shot choice evaluation: prompt assembly from exemplars, pluggable
// log-likelihood scoring, and the two report metrics (macro F1, accuracy).
// Everything is deterministic for a fixed (instances, scorer, k, seed).

namespace kf::eval {

enum class Task { copa, hellaswag, boolq, sentineg, wic };

inline Task task_from_string(std::string_view s) {
  if (s == "copa") return Task::copa;
  if (s == "hellaswag") return Task::hellaswag;
  if (s == "boolq") return Task::boolq;
  if (s == "sentineg") return Task::sentineg;
  if (s == "wic") return Task::wic;
  throw std::invalid_argument("unknown task '" + std::string(s) + "'");
}

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::copa: return "copa";
    case Task::hellaswag: return "hellaswag";
    case Task::boolq: return "boolq";
    case Task::sentineg: return "sentineg";
    case Task::wic: return "wic";
  }
  return "?";
}

struct TaskInstance {
  Task task = Task::copa;
  std::string id;
  std::string split;  // "fewshot" marks exemplar-pool membership
  std::map<std::string, std::string> fields;
  std::vector<std::string> choices;
  int gold = 0;
};

inline void validate_instance(const TaskInstance& inst) {
  if (inst.choices.size() < 2)
    throw std::invalid_argument("instance '" + inst.id + "': needs at least 2 choices");
  if (inst.gold < 0 || static_cast<std::size_t>(inst.gold) >= inst.choices.size())
    throw std::invalid_argument("instance '" + inst.id + "': gold index out of range");
  const auto require = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (!inst.fields.contains(k))
        throw std::invalid_argument("instance '" + inst.id + "': missing field '" + k + "'");
  };
  switch (inst.task) {
    case Task::copa: require({"premise", "question"}); break;
    case Task::wic: require({"word", "context1", "context2"}); break;
    case Task::hellaswag: require({"context"}); break;
    case Task::boolq: require({"passage", "question"}); break;
    case Task::sentineg: require({"sentence"}); break;
  }
}

struct TemplateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PromptTemplate {
  std::string format;          // "{name}" placeholders bound from instance fields
  std::string separator = "\n\n";
  std::map<std::string, std::string> verbalizer;  // optional choice-text rewrites
};

// Substitutes {name} placeholders; an unbound placeholder is an error that
// names the offender. Braces with no closing brace pass through literally.
inline std::string render_template(const std::string& format,
                                   const std::map<std::string, std::string>& fields) {
  std::string out;
  out.reserve(format.size());
  std::size_t i = 0;
  while (i < format.size()) {
    if (format[i] == '{') {
      const std::size_t close = format.find('}', i + 1);
      if (close != std::string::npos) {
        const std::string name = format.substr(i + 1, close - i - 1);
        const auto it = fields.find(name);
        if (it == fields.end())
          throw TemplateError("unbound placeholder '" + name + "'");
        out += it->second;
        i = close + 1;
        continue;
      }
    }
    out.push_back(format[i]);
    ++i;
  }
  return out;
}

inline PromptTemplate default_template(Task t) {
  PromptTemplate tpl;
  switch (t) {
    case Task::copa:
      tpl.format = "Premise: {premise}\nQuestion: {question}\nAnswer:";
      break;
    case Task::hellaswag:
      tpl.format = "Context: {context}\nContinuation:";
      break;
    case Task::boolq:
      tpl.format = "Passage: {passage}\nQuestion: {question}\nAnswer:";
      break;
    case Task::sentineg:
      tpl.format = "Sentence: {sentence}\nSentiment:";
      break;
    case Task::wic:
      tpl.format = "Word: {word}\nContext 1: {context1}\nContext 2: {context2}\nSame sense?";
      break;
  }
  return tpl;
}

inline std::string verbalize(const PromptTemplate& tpl, const std::string& choice) {
  const auto it = tpl.verbalizer.find(choice);
  return it == tpl.verbalizer.end() ? choice : it->second;
}

// k exemplars rendered with their gold answer, then the bare query, all
// joined by the separator.
inline std::string build_prompt(const TaskInstance& query,
                                const std::vector<TaskInstance>& exemplars,
                                const PromptTemplate& tpl) {
  std::string out;
  for (const TaskInstance& ex : exemplars) {
    if (ex.task != query.task)
      throw std::invalid_argument("exemplar '" + ex.id + "' belongs to a different task");
    out += render_template(tpl.format, ex.fields);
    out += verbalize(tpl, ex.choices.at(static_cast<std::size_t>(ex.gold)));
    out += tpl.separator;
  }
  out += render_template(tpl.format, query.fields);
  return out;
}

// ---- Scoring ----------------------------------------------------------

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const std::string& context, const std::string& continuation) = 0;
  // Non-reentrant scorers (e.g. a child process with one stdio channel)
  // must not be called from multiple threads at once.
  virtual bool reentrant() const { return false; }
};

// Deterministic pseudo-random scores; models the no-signal baseline.
class RandomScorer : public Scorer {
 public:
  explicit RandomScorer(std::uint64_t seed = 0) : seed_(seed) {}
  double score(const std::string& context, const std::string& continuation) override {
    const std::uint64_t h = hash::stable64(context + '\x1f' + continuation, seed_);
    return static_cast<double>(h >> 11) * 0x1.0p-53;  // uniform [0,1)
  }
  bool reentrant() const override { return true; }

 private:
  std::uint64_t seed_;
};

// Child process speaking line-delimited JSON on stdio:
//   request  {"context": ..., "continuation": ...}
//   response {"loglik": ...}
class ExternalScorer : public Scorer {
 public:
  explicit ExternalScorer(const std::string& command) {
    // a scorer that dies mid-run must surface as an error, not a signal
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
      throw std::runtime_error("cannot create scorer pipes");
    pid_ = ::fork();
    if (pid_ < 0) throw std::runtime_error("cannot fork scorer process");
    if (pid_ == 0) {
      ::dup2(to_child[0], 0);
      ::dup2(from_child[1], 1);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    to_ = ::fdopen(to_child[1], "w");
    from_ = ::fdopen(from_child[0], "r");
    if (!to_ || !from_) throw std::runtime_error("cannot open scorer streams");
  }

  ~ExternalScorer() override {
    if (to_) ::fclose(to_);
    if (from_) ::fclose(from_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  double score(const std::string& context, const std::string& continuation) override {
    nlohmann::ordered_json req;
    req["context"] = context;
    req["continuation"] = continuation;
    const std::string line = req.dump() + "\n";
    if (std::fwrite(line.data(), 1, line.size(), to_) != line.size() || std::fflush(to_) != 0)
      throw std::runtime_error("scorer process rejected request");
    std::string resp;
    for (int c; (c = std::fgetc(from_)) != EOF && c != '\n';) resp.push_back(static_cast<char>(c));
    if (resp.empty()) throw std::runtime_error("scorer process closed its output");
    const auto j = nlohmann::json::parse(resp, nullptr, false);
    if (j.is_discarded() || !j.contains("loglik") || !j["loglik"].is_number())
      throw std::runtime_error("scorer response is not {\"loglik\": <number>}");
    return j["loglik"].get<double>();
  }

  bool reentrant() const override { return false; }

 private:
  ::pid_t pid_ = -1;
  std::FILE* to_ = nullptr;
  std::FILE* from_ = nullptr;
};

// Scores every choice; optional normalization divides by continuation
// length in code points. Argmax with lowest-index tie-break.
inline std::pair<int, std::vector<double>> score_choices(Scorer& scorer,
                                                         const std::string& context,
                                                         const std::vector<std::string>& choices,
                                                         bool normalize) {
  if (choices.size() < 2) throw std::invalid_argument("need at least 2 choices");
  std::vector<double> scores;
  scores.reserve(choices.size());
  for (std::size_t i = 0; i < choices.size(); ++i) {
    double s;
    try {
      s = scorer.score(context, choices[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("scorer failed on choice " + std::to_string(i) + ": " + e.what());
    }
    if (normalize) {
      const std::size_t n = std::max<std::size_t>(1, uni::code_point_count(choices[i]));
      s /= static_cast<double>(n);
    }
    scores.push_back(s);
  }
  int pred = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[pred]) pred = static_cast<int>(i);
  return {pred, scores};
}

// ---- Metrics ----------------------------------------------------------

// Unweighted mean of per-class F1 over every label seen in golds or preds.
// A class with zero precision+recall contributes an F1 of exactly 0.
inline double macro_f1(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.size() != golds.size() || preds.empty())
    throw std::invalid_argument("preds and golds must be equal-length and non-empty");
  std::set<int> labels(preds.begin(), preds.end());
  labels.insert(golds.begin(), golds.end());
  double sum = 0.0;
  for (const int c : labels) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == c && golds[i] == c) ++tp;
      else if (preds[i] == c) ++fp;
      else if (golds[i] == c) ++fn;
    }
    const double p = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
    sum += p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  return sum / static_cast<double>(labels.size());
}

inline double accuracy(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.size() != golds.size() || preds.empty())
    throw std::invalid_argument("preds and golds must be equal-length and non-empty");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

// ---- Harness ----------------------------------------------------------

struct InstanceRecord {
  std::string id;
  int pred = 0;
  int gold = 0;
  std::vector<double> scores;
};

struct EvalResult {
  Task task = Task::copa;
  std::string metric;  // "macro_f1" or "accuracy"
  double value = 0.0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool normalize = false;
  std::vector<InstanceRecord> records;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Instances with split "fewshot" form the exemplar pool; when none are
// marked, every instance is both query and pool candidate. A query never
// draws itself as an exemplar; sampling is uniform without replacement,
// seeded per query id so results do not depend on evaluation order.
inline EvalResult evaluate(const std::vector<TaskInstance>& instances, Scorer& scorer,
                           std::size_t k, std::uint64_t seed, const PromptTemplate& tpl,
                           bool normalize = false) {
  if (instances.empty()) throw ConfigError("no instances to evaluate");
  for (const TaskInstance& inst : instances) validate_instance(inst);

  std::vector<std::size_t> pool;
  std::vector<std::size_t> queries;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].split == "fewshot") pool.push_back(i);
  }
  const bool dedicated_pool = !pool.empty();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (dedicated_pool && instances[i].split == "fewshot") continue;
    queries.push_back(i);
    if (!dedicated_pool) pool.push_back(i);
  }
  if (queries.empty()) throw ConfigError("every instance is marked fewshot; nothing to score");

  EvalResult result;
  result.task = instances[queries.front()].task;
  result.k = k;
  result.seed = seed;
  result.normalize = normalize;

  std::vector<int> preds, golds;
  for (const std::size_t qi : queries) {
    const TaskInstance& query = instances[qi];
    std::vector<std::size_t> eligible;
    eligible.reserve(pool.size());
    for (const std::size_t pi : pool)
      if (instances[pi].id != query.id) eligible.push_back(pi);
    if (k > eligible.size())
      throw ConfigError("k=" + std::to_string(k) + " exceeds exemplar pool of " +
                        std::to_string(eligible.size()) + " for instance '" + query.id + "'");

    std::mt19937_64 rng(hash::stable64(query.id, seed));
    std::vector<TaskInstance> exemplars;
    for (std::size_t j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, eligible.size() - 1);
      std::swap(eligible[j], eligible[pick(rng)]);
      exemplars.push_back(instances[eligible[j]]);
    }

    const std::string context = build_prompt(query, exemplars, tpl);
    std::vector<std::string> rendered;
    rendered.reserve(query.choices.size());
    for (const std::string& c : query.choices) rendered.push_back(verbalize(tpl, c));
    const auto [pred, scores] = score_choices(scorer, context, rendered, normalize);

    result.records.push_back({query.id, pred, query.gold, scores});
    preds.push_back(pred);
    golds.push_back(query.gold);
  }

  if (result.task == Task::wic) {
    result.metric = "accuracy";
    result.value = accuracy(preds, golds);
  } else {
    result.metric = "macro_f1";
    result.value = macro_f1(preds, golds);
  }
  return result;
}

inline TaskInstance instance_from_json(const nlohmann::json& j) {
  TaskInstance inst;
  inst.id = j.value("id", std::string{});
  const auto need = [&](const char* k) -> const nlohmann::json& {
    const auto it = j.find(k);
    if (it == j.end())
      throw std::invalid_argument("instance '" + inst.id + "': missing field '" + std::string(k) +
                                  "'");
    return *it;
  };
  if (!j.contains("id")) need("id");
  inst.task = task_from_string(need("task").get<std::string>());
  inst.split = j.value("split", std::string{});
  if (const auto it = j.find("fields"); it != j.end())
    for (const auto& [key, val] : it->items()) inst.fields[key] = val.get<std::string>();
  inst.choices = need("choices").get<std::vector<std::string>>();
  inst.gold = need("gold").get<int>();
  validate_instance(inst);
  return inst;
}

inline nlohmann::ordered_json result_to_json(const EvalResult& r) {
  nlohmann::ordered_json j;
  j["task"] = std::string(to_string(r.task));
  j["metric"] = r.metric;
  // macro averaging is an assumption, recorded so consumers can tell
  j["averaging"] = r.metric == "macro_f1" ? "macro (assumed)" : "n/a";
  j["value"] = r.value;
  j["k"] = r.k;
  j["seed"] = r.seed;
  j["normalize"] = r.normalize;
  auto records = nlohmann::ordered_json::array();
  for (const InstanceRecord& rec : r.records) {
    nlohmann::ordered_json e;
    e["id"] = rec.id;
    e["pred"] = rec.pred;
    e["gold"] = rec.gold;
    e["scores"] = rec.scores;
    records.push_back(std::move(e));
  }
  j["instances"] = std::move(records);
  return j;
}

}  // namespace kf::eval
