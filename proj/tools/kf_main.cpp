// kf: corpus curation and tokenization toolkit.
//
// Exit codes: 0 success, 1 completed with skipped records (see the
// .errors.jsonl sidecar), 2 configuration or usage error.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kf/bpe.hpp"
#include "kf/config.hpp"
#include "kf/document.hpp"
#include "kf/eval.hpp"
#include "kf/jsonl.hpp"
#include "kf/model_plan.hpp"
#include "kf/pipeline.hpp"
#include "kf/report.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::string pii_policy;  // empty: take the config file's value
};

kf::cfg::PipelineConfig effective_config(const GlobalOpts& g) {
  kf::cfg::PipelineConfig c;
  if (!g.config_path.empty()) c = kf::cfg::load_config(g.config_path);
  if (!g.pii_policy.empty()) c.pii_policy = kf::pii::policy_from_string(g.pii_policy);
  return c;
}

int cmd_ingest(const std::string& input, const std::string& format, const std::string& output) {
  kf::io::DocumentReader reader(input, kf::io::format_from_string(format));
  kf::io::DocumentWriter writer(output);
  while (auto d = reader.next()) writer.write(*d);
  const std::size_t n = writer.close();
  kf::io::write_error_sidecar(output, reader.errors());
  std::cout << "wrote " << n << " documents to " << output << "\n";
  if (!reader.errors().empty()) {
    std::cout << "skipped " << reader.errors().size() << " bad records (see " << output
              << ".errors.jsonl)\n";
    return 1;
  }
  return 0;
}

int cmd_clean(const GlobalOpts& g, const std::vector<std::string>& inputs,
              const std::string& outdir) {
  const auto config = effective_config(g);
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  const auto result = kf::pipe::run_pipeline(config, paths, outdir, g.jobs);
  const auto& t = result.stats;
  std::cout << "documents: " << t.docs_in << " in, " << t.docs_out << " out (" << t.dropped
            << " dropped, " << t.dedup_removed << " duplicates)\n";
  std::cout << "stats: " << (fs::path(outdir) / "stats.json").string() << "\n";
  if (result.exit_code != 0)
    std::cout << "skipped " << t.read_errors << " bad records (see pipeline.errors.jsonl)\n";
  return result.exit_code;
}

int cmd_tok_train(const GlobalOpts& g, const std::vector<std::string>& inputs,
                  std::size_t vocab_size, const std::vector<std::string>& specials,
                  const std::string& seg_kind, const std::string& seg_cmd,
                  const std::string& format, const std::string& model_dir) {
  auto config = effective_config(g);
  if (vocab_size != 0) config.tok_vocab_size = vocab_size;
  if (!specials.empty()) config.tok_specials = specials;
  if (!seg_kind.empty()) config.segmenter.kind = kf::seg::kind_from_string(seg_kind);
  if (!seg_cmd.empty()) config.segmenter.command = seg_cmd;

  kf::bpe::SegmentCounts counts;
  std::size_t docs = 0;
  for (const auto& input : inputs) {
    kf::io::DocumentReader reader(input, kf::io::format_from_string(format));
    while (auto d = reader.next()) {
      counts.add_text(d->text, config.segmenter);
      ++docs;
    }
    if (!reader.errors().empty())
      std::cerr << "warning: skipped " << reader.errors().size() << " bad records in " << input
                << "\n";
  }
  const auto model = kf::bpe::train_bpe(counts, config.tok_vocab_size, config.tok_specials,
                                        config.segmenter);
  kf::bpe::save(model, model_dir);
  std::cout << "trained on " << docs << " documents: " << model.merges.size() << " merges, "
            << model.vocab_size() << " tokens ("
            << kf::bpe::padded_vocab(model.vocab_size(), config.tok_padding_multiple)
            << " padded)\n";
  std::cout << "model: " << model_dir << "\n";
  return 0;
}

int cmd_tok_encode(const std::string& model_dir, const std::string& text,
                   const std::string& input, bool pieces, bool no_specials) {
  const auto model = kf::bpe::load(model_dir);
  std::string payload = text;
  if (!input.empty()) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + input);
    payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  const auto ids = kf::bpe::encode(model, payload, !no_specials);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) std::cout << ' ';
    if (pieces)
      std::cout << model.token_of(ids[i]);
    else
      std::cout << ids[i];
  }
  std::cout << "\n";
  return 0;
}

int cmd_tok_decode(const std::string& model_dir, const std::string& ids_arg) {
  const auto model = kf::bpe::load(model_dir);
  std::vector<int> ids;
  std::string tok;
  for (const char c : ids_arg + " ") {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!tok.empty()) ids.push_back(std::stoi(tok));
      tok.clear();
    } else {
      tok.push_back(c);
    }
  }
  std::cout << kf::bpe::decode(model, ids);
  return 0;
}

int cmd_plan_params(const std::string& preset_name) {
  std::vector<const kf::plan::Preset*> selected;
  if (preset_name == "all") {
    for (const auto& p : kf::plan::presets()) selected.push_back(&p);
  } else {
    selected.push_back(&kf::plan::preset(preset_name));
  }
  for (const auto* p : selected) {
    const std::uint64_t computed = kf::plan::param_count(p->config);
    std::cout << p->config.name << "  computed " << computed << "  published "
              << p->published_params;
    if (computed == p->published_params) {
      std::cout << "  match\n";
    } else {
      const long long delta = static_cast<long long>(p->published_params) -
                              static_cast<long long>(computed);
      std::cout << "  DISCREPANCY " << (delta >= 0 ? "+" : "") << delta << "\n";
    }
  }
  return 0;
}

int cmd_plan_budget(const std::string& preset_name, std::uint64_t steps, std::uint64_t tokens,
                    std::uint64_t batch, std::uint64_t seq_len) {
  if (!preset_name.empty()) {
    const auto& p = kf::plan::preset(preset_name);
    const std::uint64_t b = batch ? batch : p.batch_sequences;
    const std::uint64_t s = seq_len ? seq_len : p.config.seq_len;
    if (p.published_steps) {
      const auto budget = kf::plan::token_budget(p.published_steps, b, s);
      const double delta =
          100.0 * (static_cast<double>(budget.tokens) - static_cast<double>(p.stated_tokens)) /
          static_cast<double>(p.stated_tokens);
      std::printf("%s: %llu steps x %llu seqs x %llu tok/seq = %llu tokens (stated %llu, %+.2f%%)\n",
                  p.config.name.c_str(), (unsigned long long)budget.steps,
                  (unsigned long long)budget.batch_sequences, (unsigned long long)budget.seq_len,
                  (unsigned long long)budget.tokens, (unsigned long long)p.stated_tokens, delta);
    } else {
      const std::uint64_t need = kf::plan::steps_for(p.stated_tokens, b, s);
      std::printf("%s: %llu tokens / (%llu x %llu) = %llu steps\n", p.config.name.c_str(),
                  (unsigned long long)p.stated_tokens, (unsigned long long)b,
                  (unsigned long long)s, (unsigned long long)need);
    }
    return 0;
  }
  if (steps) {
    const auto budget = kf::plan::token_budget(steps, batch, seq_len);
    std::printf("%llu steps x %llu seqs x %llu tok/seq = %llu tokens\n", (unsigned long long)steps,
                (unsigned long long)batch, (unsigned long long)seq_len,
                (unsigned long long)budget.tokens);
  } else {
    const std::uint64_t need = kf::plan::steps_for(tokens, batch, seq_len);
    std::printf("%llu tokens / (%llu x %llu) = %llu steps\n", (unsigned long long)tokens,
                (unsigned long long)batch, (unsigned long long)seq_len,
                (unsigned long long)need);
  }
  return 0;
}

int cmd_plan_validate(const std::string& preset_name, const std::string& config_json) {
  std::vector<kf::plan::ModelConfig> configs;
  if (!preset_name.empty()) {
    if (preset_name == "all") {
      for (const auto& p : kf::plan::presets()) configs.push_back(p.config);
    } else {
      configs.push_back(kf::plan::preset(preset_name).config);
    }
  }
  if (!config_json.empty()) {
    std::ifstream in(config_json, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + config_json);
    const auto j = nlohmann::json::parse(in);
    for (const auto& [name, row] : j.items()) {
      kf::plan::ModelConfig c;
      c.name = name;
      c.n_layers = row.at("n_layers").get<std::uint64_t>();
      c.d_model = row.at("d_model").get<std::uint64_t>();
      c.d_ff = row.at("d_ff").get<std::uint64_t>();
      c.n_heads = row.at("n_heads").get<std::uint64_t>();
      c.d_head = row.at("d_head").get<std::uint64_t>();
      c.n_vocab = row.at("n_vocab").get<std::uint64_t>();
      c.n_vocab_padded = row.at("n_vocab_padded").get<std::uint64_t>();
      c.rope_dims = row.at("rope_dims").get<std::uint64_t>();
      c.seq_len = row.value("seq_len", std::uint64_t{2048});
      configs.push_back(std::move(c));
    }
  }
  for (const auto& c : configs) {
    const auto violations = kf::plan::validate_config(c);
    if (violations.empty()) {
      std::cout << c.name << ": ok\n";
    } else {
      for (const auto& v : violations) std::cout << c.name << ": " << v << "\n";
    }
  }
  return 0;
}

int cmd_eval_run(const GlobalOpts& g, const std::string& task_name, const std::string& file,
                 std::size_t k, const std::string& scorer_name, const std::string& scorer_cmd,
                 bool normalize, const std::string& template_file, const std::string& output) {
  const kf::eval::Task task = kf::eval::task_from_string(task_name);

  std::vector<kf::eval::TaskInstance> instances;
  {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded())
        throw std::runtime_error(file + ":" + std::to_string(line_no) + ": invalid JSON");
      auto inst = kf::eval::instance_from_json(j);
      if (inst.task != task)
        throw std::runtime_error(file + ":" + std::to_string(line_no) +
                                 ": instance task does not match --task");
      instances.push_back(std::move(inst));
    }
  }

  kf::eval::PromptTemplate tpl = kf::eval::default_template(task);
  if (!template_file.empty()) {
    std::ifstream in(template_file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + template_file);
    const auto j = nlohmann::json::parse(in);
    tpl.format = j.at("format").get<std::string>();
    tpl.separator = j.value("separator", std::string("\n\n"));
    if (j.contains("verbalizer"))
      for (const auto& [key, val] : j.at("verbalizer").items())
        tpl.verbalizer[key] = val.get<std::string>();
  }

  std::unique_ptr<kf::eval::Scorer> scorer;
  if (scorer_name == "stub") {
    scorer = std::make_unique<kf::eval::RandomScorer>(g.seed);
  } else if (scorer_name == "external") {
    if (scorer_cmd.empty()) throw kf::eval::ConfigError("--scorer external needs --scorer-cmd");
    scorer = std::make_unique<kf::eval::ExternalScorer>(scorer_cmd);
  } else {
    throw kf::eval::ConfigError("unknown scorer '" + scorer_name + "'");
  }

  const auto result = kf::eval::evaluate(instances, *scorer, k, g.seed, tpl, normalize);
  const auto j = kf::eval::result_to_json(result);
  if (!output.empty()) {
    std::ofstream out(output, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + output);
  }
  std::cout << result.metric << " = " << result.value << " (" << result.records.size()
            << " instances, k=" << k << ")\n";
  return 0;
}

int cmd_report(const std::string& stats_path) {
  std::ifstream in(stats_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + stats_path);
  const auto j = nlohmann::json::parse(in);
  const auto rep = kf::report_from_json(j.contains("report") ? j.at("report") : j);
  std::cout << kf::render_table(rep);
  return 0;
}

// Flags win over the environment. A malformed KF_ value is an error, not a
// silent fall back to defaults; set to empty to leave a variable unset.
std::string apply_env_overrides(const CLI::App& app, GlobalOpts& g) {
  if (const char* v = std::getenv("KF_CONFIG"); v && *v && app.count("--config") == 0)
    g.config_path = v;
  if (const char* v = std::getenv("KF_JOBS"); v && *v && app.count("--jobs") == 0) {
    std::size_t n = 0;
    const auto [end, ec] = std::from_chars(v, v + std::strlen(v), n);
    if (ec != std::errc{} || *end != '\0' || n < 1 || n > 256)
      return "KF_JOBS must be an integer in [1,256], got '" + std::string(v) + "'";
    g.jobs = n;
  }
  if (const char* v = std::getenv("KF_SEED"); v && *v && app.count("--seed") == 0) {
    std::uint64_t n = 0;
    const auto [end, ec] = std::from_chars(v, v + std::strlen(v), n);
    if (ec != std::errc{} || *end != '\0')
      return "KF_SEED must be an unsigned integer, got '" + std::string(v) + "'";
    g.seed = n;
  }
  if (const char* v = std::getenv("KF_PII_POLICY"); v && *v && app.count("--pii-policy") == 0) {
    if (std::string_view(v) != "placeholder" && std::string_view(v) != "mask")
      return "KF_PII_POLICY must be placeholder or mask, got '" + std::string(v) + "'";
    g.pii_policy = v;
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpus curation and tokenization toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "pipeline config file (JSON, or $KF_CONFIG)");
  app.add_option("--jobs", g.jobs, "worker threads (or $KF_JOBS)")
      ->check(CLI::Range(std::size_t{1}, std::size_t{256}));
  app.add_option("--seed", g.seed, "random seed (or $KF_SEED)");
  app.add_option("--pii-policy", g.pii_policy, "placeholder|mask (or $KF_PII_POLICY)")
      ->check(CLI::IsMember({"placeholder", "mask"}));

  // ingest
  auto* ingest = app.add_subcommand("ingest", "read a corpus file, write normalized JSONL");
  std::string in_input, in_format = "jsonl", in_output;
  ingest->add_option("--input", in_input)->required()->check(CLI::ExistingFile);
  ingest->add_option("--format", in_format)->check(CLI::IsMember({"jsonl", "plain_text"}));
  ingest->add_option("--output", in_output)->required();

  // clean
  auto* clean = app.add_subcommand("clean", "run the full cleaning pipeline");
  std::vector<std::string> cl_inputs;
  std::string cl_outdir;
  clean->add_option("--input", cl_inputs)->required()->check(CLI::ExistingFile);
  clean->add_option("--output-dir", cl_outdir)->required();

  // tok
  auto* tok = app.add_subcommand("tok", "tokenizer lifecycle");
  tok->require_subcommand(1);
  auto* tok_train = tok->add_subcommand("train", "train a BPE model");
  std::vector<std::string> tt_inputs, tt_specials;
  std::size_t tt_vocab = 0;
  std::string tt_seg_kind, tt_seg_cmd, tt_format = "jsonl", tt_model_dir;
  tok_train->add_option("--input", tt_inputs)->required()->check(CLI::ExistingFile);
  tok_train->add_option("--vocab-size", tt_vocab);
  tok_train->add_option("--special", tt_specials, "special token (repeatable)");
  tok_train->add_option("--segmenter", tt_seg_kind)
      ->check(CLI::IsMember({"whitespace", "external_command"}));
  tok_train->add_option("--segmenter-cmd", tt_seg_cmd);
  tok_train->add_option("--format", tt_format)->check(CLI::IsMember({"jsonl", "plain_text"}));
  tok_train->add_option("--model-dir", tt_model_dir)->required();

  auto* tok_encode = tok->add_subcommand("encode", "text to token ids");
  std::string te_model, te_text, te_input;
  bool te_pieces = false, te_no_specials = false;
  tok_encode->add_option("--model-dir", te_model)->required();
  tok_encode->add_option("--text", te_text);
  tok_encode->add_option("--input", te_input)->check(CLI::ExistingFile);
  tok_encode->add_flag("--pieces", te_pieces, "print token strings instead of ids");
  tok_encode->add_flag("--no-specials", te_no_specials, "do not match special tokens");

  auto* tok_decode = tok->add_subcommand("decode", "token ids to text");
  std::string td_model, td_ids;
  tok_decode->add_option("--model-dir", td_model)->required();
  tok_decode->add_option("--ids", td_ids)->required();

  // plan
  auto* plan = app.add_subcommand("plan", "model configuration arithmetic");
  plan->require_subcommand(1);
  auto* plan_params = plan->add_subcommand("params", "parameter counts");
  std::string pp_preset = "all";
  plan_params->add_option("--preset", pp_preset, "1.3b|3.8b|5.8b|12.8b|all");

  auto* plan_budget = plan->add_subcommand("budget", "token budget arithmetic");
  std::string pb_preset;
  std::uint64_t pb_steps = 0, pb_tokens = 0, pb_batch = 0, pb_seq = 0;
  plan_budget->add_option("--preset", pb_preset);
  plan_budget->add_option("--steps", pb_steps);
  plan_budget->add_option("--tokens", pb_tokens);
  plan_budget->add_option("--batch", pb_batch);
  plan_budget->add_option("--seq-len", pb_seq);

  auto* plan_validate = plan->add_subcommand("validate", "check shape invariants");
  std::string pv_preset, pv_file;
  plan_validate->add_option("--preset", pv_preset, "1.3b|3.8b|5.8b|12.8b|all");
  plan_validate->add_option("--config-file", pv_file)->check(CLI::ExistingFile);

  // eval
  auto* eval = app.add_subcommand("eval", "few-shot evaluation");
  eval->require_subcommand(1);
  auto* eval_run = eval->add_subcommand("run", "evaluate a task file");
  std::string er_task, er_file, er_scorer = "stub", er_scorer_cmd, er_template, er_output;
  std::size_t er_k = 0;
  bool er_normalize = false;
  eval_run->add_option("--task", er_task)->required()
      ->check(CLI::IsMember({"copa", "hellaswag", "boolq", "sentineg", "wic"}));
  eval_run->add_option("--file", er_file)->required()->check(CLI::ExistingFile);
  eval_run->add_option("--k", er_k);
  eval_run->add_option("--scorer", er_scorer)->check(CLI::IsMember({"stub", "external"}));
  eval_run->add_option("--scorer-cmd", er_scorer_cmd);
  eval_run->add_flag("--normalize", er_normalize, "length-normalize choice scores");
  eval_run->add_option("--template-file", er_template)->check(CLI::ExistingFile);
  eval_run->add_option("--output", er_output, "write result JSON here");

  // report
  auto* report = app.add_subcommand("report", "render the source/size table");
  std::string rp_stats;
  report->add_option("--stats", rp_stats)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (const std::string err = apply_env_overrides(app, g); !err.empty()) {
    std::cerr << "error: " << err << "\n";
    return 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(in_input, in_format, in_output);
    if (clean->parsed()) return cmd_clean(g, cl_inputs, cl_outdir);
    if (tok->parsed()) {
      if (tok_train->parsed())
        return cmd_tok_train(g, tt_inputs, tt_vocab, tt_specials, tt_seg_kind, tt_seg_cmd,
                             tt_format, tt_model_dir);
      if (tok_encode->parsed())
        return cmd_tok_encode(te_model, te_text, te_input, te_pieces, te_no_specials);
      if (tok_decode->parsed()) return cmd_tok_decode(td_model, td_ids);
    }
    if (plan->parsed()) {
      if (plan_params->parsed()) return cmd_plan_params(pp_preset);
      if (plan_budget->parsed()) {
        if (pb_preset.empty()) {
          if (!pb_batch || !pb_seq || (!pb_steps && !pb_tokens))
            throw kf::cfg::ConfigError(
                "plan budget needs --preset, or --batch and --seq-len with --steps or --tokens");
        }
        return cmd_plan_budget(pb_preset, pb_steps, pb_tokens, pb_batch, pb_seq);
      }
      if (plan_validate->parsed()) {
        if (pv_preset.empty() && pv_file.empty())
          throw kf::cfg::ConfigError("plan validate needs --preset or --config-file");
        return cmd_plan_validate(pv_preset, pv_file);
      }
    }
    if (eval->parsed() && eval_run->parsed())
      return cmd_eval_run(g, er_task, er_file, er_k, er_scorer, er_scorer_cmd, er_normalize,
                          er_template, er_output);
    if (report->parsed()) return cmd_report(rp_stats);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
