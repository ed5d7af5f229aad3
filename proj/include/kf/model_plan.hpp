#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Configuration arithmetic for GPT-NeoX-style decoder stacks: invariant
// checks, exact parameter counts, and token-budget accounting.

namespace kf::plan {

struct ModelConfig {
  std::string name;
  std::uint64_t n_layers = 0;
  std::uint64_t d_model = 0;
  std::uint64_t d_ff = 0;
  std::uint64_t n_heads = 0;
  std::uint64_t d_head = 0;
  std::uint64_t n_vocab = 0;
  std::uint64_t n_vocab_padded = 0;
  std::uint64_t rope_dims = 0;
  std::uint64_t seq_len = 2048;
};

inline std::vector<std::string> validate_config(const ModelConfig& cfg) {
  std::vector<std::string> violations;
  if (cfg.d_model != cfg.n_heads * cfg.d_head)
    violations.push_back("d_model != n_heads * d_head");
  if (cfg.rope_dims > cfg.d_head) violations.push_back("rope_dims > d_head");
  if (cfg.d_ff < cfg.d_model) violations.push_back("d_ff < d_model");
  if (cfg.n_vocab_padded < cfg.n_vocab) violations.push_back("n_vocab_padded < n_vocab");
  return violations;
}

// Untied input/output embeddings (2 V d), per layer: QKV projections with
// bias (3d^2 + 3d), attention output (d^2 + d), two feed-forward maps
// (d*ff + ff and ff*d + d), two layer-norms (4d); final layer-norm (2d).
// Rotary position embeddings hold no parameters.
inline std::uint64_t param_count(const ModelConfig& cfg) {
  if (!validate_config(cfg).empty())
    throw std::invalid_argument("config violates shape invariants");
  const std::uint64_t d = cfg.d_model, L = cfg.n_layers, ff = cfg.d_ff,
                      V = cfg.n_vocab_padded;
  return 2 * V * d + L * (4 * d * d + 2 * d * ff + 9 * d + ff) + 2 * d;
}

struct TokenBudget {
  std::uint64_t steps = 0;
  std::uint64_t batch_sequences = 0;
  std::uint64_t seq_len = 0;
  std::uint64_t tokens = 0;  // steps * batch_sequences * seq_len
};

inline TokenBudget token_budget(std::uint64_t steps, std::uint64_t batch_sequences,
                                std::uint64_t seq_len) {
  if (steps == 0 || batch_sequences == 0 || seq_len == 0)
    throw std::invalid_argument("steps, batch, and seq_len must be positive");
  return {steps, batch_sequences, seq_len, steps * batch_sequences * seq_len};
}

// Steps needed to consume `tokens` (ceiling).
inline std::uint64_t steps_for(std::uint64_t tokens, std::uint64_t batch_sequences,
                               std::uint64_t seq_len) {
  if (tokens == 0 || batch_sequences == 0 || seq_len == 0)
    throw std::invalid_argument("tokens, batch, and seq_len must be positive");
  const std::uint64_t per_step = batch_sequences * seq_len;
  return (tokens + per_step - 1) / per_step;
}

inline std::uint64_t gas_split(std::uint64_t global_batch, std::uint64_t micro_batch) {
  if (micro_batch == 0 || global_batch % micro_batch != 0)
    throw std::invalid_argument("micro batch must divide global batch");
  return global_batch / micro_batch;
}

// Published figures shipped alongside each config. published_steps is 0
// where only a token total was stated.
struct Preset {
  ModelConfig config;
  std::uint64_t published_params = 0;
  std::uint64_t batch_sequences = 0;
  std::uint64_t stated_tokens = 0;
  std::uint64_t published_steps = 0;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {{"1.3b", 24, 2048, 8192, 16, 128, 30003, 30080, 64, 2048},
       1'331'810'304ULL, 1024, 213'000'000'000ULL, 0},
      {{"3.8b", 32, 3072, 12288, 24, 128, 30003, 30080, 64, 2048},
       3'809'974'272ULL, 1024, 219'000'000'000ULL, 0},
      {{"5.8b", 28, 4096, 16384, 16, 256, 30003, 30080, 64, 2048},
       5'885'059'072ULL, 256, 172'000'000'000ULL, 320'000},
      {{"12.8b", 40, 5120, 20480, 40, 128, 30003, 30080, 64, 2048},
       12'898'631'680ULL, 256, 167'000'000'000ULL, 301'000},
  };
  return table;
}

inline const Preset& preset(std::string_view name) {
  for (const Preset& p : presets())
    if (p.config.name == name) return p;
  throw std::invalid_argument("unknown preset '" + std::string(name) +
                              "' (expected 1.3b, 3.8b, 5.8b, or 12.8b)");
}

}  // namespace kf::plan
