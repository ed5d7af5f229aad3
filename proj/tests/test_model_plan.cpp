#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kf/model_plan.hpp"

using namespace kf;

namespace {

// Itemized matrix-by-matrix recount, independent of the closed form.
std::uint64_t count_by_matrix(const plan::ModelConfig& c) {
  const std::uint64_t d = c.d_model, ff = c.d_ff, V = c.n_vocab_padded;
  std::uint64_t total = 0;
  total += V * d;  // input embedding
  total += V * d;  // output projection (untied)
  for (std::uint64_t l = 0; l < c.n_layers; ++l) {
    total += 3 * d * d + 3 * d;  // fused QKV weight + bias
    total += d * d + d;          // attention output
    total += d * ff + ff;        // ff up
    total += ff * d + d;         // ff down
    total += 2 * d;              // pre-attention layer norm
    total += 2 * d;              // pre-ff layer norm
  }
  total += 2 * d;  // final layer norm
  return total;
}

}  // namespace

TEST_CASE("preset parameter counts match the published sizes", "[model_plan]") {
  REQUIRE(plan::param_count(plan::preset("1.3b").config) == 1'331'810'304ULL);
  REQUIRE(plan::param_count(plan::preset("3.8b").config) == 3'809'974'272ULL);
  REQUIRE(plan::param_count(plan::preset("5.8b").config) == 5'885'059'072ULL);

  for (const char* name : {"1.3b", "3.8b", "5.8b"}) {
    const auto& p = plan::preset(name);
    REQUIRE(plan::param_count(p.config) == p.published_params);
  }

  // the largest config computes 5,027,840 fewer parameters than its
  // published figure; the exact computed value is pinned here
  const auto& big = plan::preset("12.8b");
  REQUIRE(plan::param_count(big.config) == 12'893'603'840ULL);
  REQUIRE(big.published_params == 12'898'631'680ULL);
  REQUIRE(big.published_params - plan::param_count(big.config) == 5'027'840ULL);
}

TEST_CASE("closed form equals the itemized recount", "[model_plan]") {
  for (const auto& p : plan::presets())
    REQUIRE(plan::param_count(p.config) == count_by_matrix(p.config));

  std::mt19937_64 rng(211);
  for (int it = 0; it < 300; ++it) {
    plan::ModelConfig c;
    c.n_layers = 1 + rng() % 48;
    c.n_heads = 1 + rng() % 64;
    c.d_head = 8 * (1 + rng() % 32);
    c.d_model = c.n_heads * c.d_head;
    c.d_ff = c.d_model * (1 + rng() % 4);
    c.n_vocab = 1000 + rng() % 60000;
    c.n_vocab_padded = c.n_vocab + rng() % 128;
    c.rope_dims = c.d_head / 2;
    REQUIRE(plan::validate_config(c).empty());
    REQUIRE(plan::param_count(c) == count_by_matrix(c));
  }
}

TEST_CASE("shape violations are named and block counting", "[model_plan]") {
  plan::ModelConfig c = plan::preset("1.3b").config;
  REQUIRE(plan::validate_config(c).empty());

  c.d_head = 100;
  auto v = plan::validate_config(c);
  REQUIRE(std::find(v.begin(), v.end(), "d_model != n_heads * d_head") != v.end());
  REQUIRE_THROWS_AS(plan::param_count(c), std::invalid_argument);

  c = plan::preset("1.3b").config;
  c.rope_dims = c.d_head + 1;
  v = plan::validate_config(c);
  REQUIRE(v == std::vector<std::string>{"rope_dims > d_head"});

  c = plan::preset("1.3b").config;
  c.d_ff = c.d_model - 1;
  v = plan::validate_config(c);
  REQUIRE(v == std::vector<std::string>{"d_ff < d_model"});

  c = plan::preset("1.3b").config;
  c.n_vocab_padded = c.n_vocab - 1;
  v = plan::validate_config(c);
  REQUIRE(v == std::vector<std::string>{"n_vocab_padded < n_vocab"});

  // violations accumulate
  c = plan::preset("1.3b").config;
  c.d_ff = 1;
  c.rope_dims = 4096;
  REQUIRE(plan::validate_config(c).size() == 2);
}

TEST_CASE("token budget arithmetic", "[model_plan]") {
  const auto b = plan::token_budget(320'000, 256, 2048);
  REQUIRE(b.tokens == 167'772'160'000ULL);
  REQUIRE(b.steps == 320'000);
  REQUIRE(b.batch_sequences == 256);
  REQUIRE(b.seq_len == 2048);
  REQUIRE_THROWS_AS(plan::token_budget(0, 256, 2048), std::invalid_argument);
  REQUIRE_THROWS_AS(plan::token_budget(1, 0, 2048), std::invalid_argument);
  REQUIRE_THROWS_AS(plan::token_budget(1, 256, 0), std::invalid_argument);
}

TEST_CASE("steps_for is the minimal covering step count", "[model_plan]") {
  REQUIRE(plan::steps_for(213'000'000'000ULL, 1024, 2048) == 101'567);
  REQUIRE(plan::steps_for(1, 1, 1) == 1);
  REQUIRE(plan::steps_for(2048, 1, 2048) == 1);
  REQUIRE(plan::steps_for(2049, 1, 2048) == 2);
  REQUIRE_THROWS_AS(plan::steps_for(0, 1, 1), std::invalid_argument);

  std::mt19937_64 rng(223);
  for (int it = 0; it < 2000; ++it) {
    const std::uint64_t batch = 1 + rng() % 4096;
    const std::uint64_t seq = 1 + rng() % 8192;
    const std::uint64_t tokens = 1 + rng() % 1'000'000'000ULL;
    const std::uint64_t s = plan::steps_for(tokens, batch, seq);
    const std::uint64_t per = batch * seq;
    REQUIRE(s * per >= tokens);
    REQUIRE((s - 1) * per < tokens);
    // exact inverse when the budget divides evenly
    REQUIRE(plan::steps_for(plan::token_budget(s, batch, seq).tokens, batch, seq) == s);
  }
}

TEST_CASE("gradient accumulation split", "[model_plan]") {
  REQUIRE(plan::gas_split(1024, 4) == 256);
  REQUIRE(plan::gas_split(256, 256) == 1);
  REQUIRE(plan::gas_split(256, 1) == 256);
  REQUIRE_THROWS_AS(plan::gas_split(1024, 3), std::invalid_argument);
  REQUIRE_THROWS_AS(plan::gas_split(1024, 0), std::invalid_argument);
}

TEST_CASE("preset table contents", "[model_plan]") {
  REQUIRE(plan::presets().size() == 4);

  const auto& small = plan::preset("1.3b");
  REQUIRE(small.config.n_layers == 24);
  REQUIRE(small.config.d_model == 2048);
  REQUIRE(small.config.d_ff == 8192);
  REQUIRE(small.config.n_heads == 16);
  REQUIRE(small.config.d_head == 128);
  REQUIRE(small.config.n_vocab == 30003);
  REQUIRE(small.config.n_vocab_padded == 30080);
  REQUIRE(small.config.rope_dims == 64);
  REQUIRE(small.config.seq_len == 2048);
  REQUIRE(small.batch_sequences == 1024);
  REQUIRE(small.stated_tokens == 213'000'000'000ULL);
  REQUIRE(small.published_steps == 0);

  const auto& mid = plan::preset("5.8b");
  REQUIRE(mid.config.n_layers == 28);
  REQUIRE(mid.config.d_model == 4096);
  REQUIRE(mid.config.n_heads == 16);
  REQUIRE(mid.config.d_head == 256);
  REQUIRE(mid.batch_sequences == 256);
  REQUIRE(mid.published_steps == 320'000);

  const auto& big = plan::preset("12.8b");
  REQUIRE(big.config.n_layers == 40);
  REQUIRE(big.config.d_model == 5120);
  REQUIRE(big.config.n_heads == 40);
  REQUIRE(big.published_steps == 301'000);

  // every preset passes its own shape checks
  for (const auto& p : plan::presets()) REQUIRE(plan::validate_config(p.config).empty());

  REQUIRE_THROWS_WITH(plan::preset("7b"),
                      "unknown preset '7b' (expected 1.3b, 3.8b, 5.8b, or 12.8b)");
}

TEST_CASE("published step counts against stated token totals", "[model_plan]") {
  // 5.8b: 320,000 steps * 256 * 2048 lands within 2.5% of the stated total
  const auto& mid = plan::preset("5.8b");
  const double got5 =
      double(plan::token_budget(mid.published_steps, mid.batch_sequences, mid.config.seq_len).tokens);
  const double rel5 = (got5 - double(mid.stated_tokens)) / double(mid.stated_tokens);
  REQUIRE(rel5 == Catch::Approx(-0.02458).margin(0.0005));

  // 12.8b: the same arithmetic misses its stated total by about -5.5%
  const auto& big = plan::preset("12.8b");
  const double got12 =
      double(plan::token_budget(big.published_steps, big.batch_sequences, big.config.seq_len).tokens);
  const double rel12 = (got12 - double(big.stated_tokens)) / double(big.stated_tokens);
  REQUIRE(rel12 == Catch::Approx(-0.05503).margin(0.0005));
}
