#pragma once

// Parameterized synthetic generation world standing in for the LLM + PRM
// pair: queries carry a latent difficulty, candidate answers are correct with
// a difficulty-dependent probability, beam partials follow a quality random
// walk pruned by a noisy step scorer, and latency is charged analytically
// from call shapes. No host clock is ever read, so runs are hermetic.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "itsr/errors.hpp"
#include "itsr/rng.hpp"
#include "itsr/strategy.hpp"

namespace itsr {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Analytic latency model. Parallel calls pay per-candidate batching costs
// once; incremental decoding pays the setup and score-call overhead on every
// step, which is what makes beam search slow at comparable token budgets.
struct LatencyParams {
  double setup_s = 0.20;
  double per_token_s = 0.004;
  double parallel_n_s = 0.01;
  double score_call_s = 0.05;
  double score_per_candidate_s = 0.002;

  void validate() const {
    if (!(setup_s >= 0.0)) throw ConfigError("latency.setup_s must be >= 0");
    if (!(per_token_s > 0.0)) throw ConfigError("latency.per_token_s must be > 0");
    if (!(parallel_n_s >= 0.0)) throw ConfigError("latency.parallel_n_s must be >= 0");
    if (!(score_call_s >= 0.0)) throw ConfigError("latency.score_call_s must be >= 0");
    if (!(score_per_candidate_s >= 0.0)) {
      throw ConfigError("latency.score_per_candidate_s must be >= 0");
    }
  }
};

struct WorldConfig {
  std::uint64_t seed = 7;
  int answer_space = 10;      // A, canonical answer ids are [0, A)
  int embedding_dim = 32;     // E
  double difficulty_alpha = 2.0;
  double difficulty_beta = 2.0;
  double base_skill = 2.0;    // kappa0
  double skill_slope = 4.0;   // kappa1
  double step_gain = 0.6;     // g, beam-search per-step quality advantage
  double reward_noise = 0.5;  // sigma_r, final-answer score noise
  double prm_noise = 0.35;    // sigma_p, step score noise
  double tokens_per_candidate_mean = 220.0;
  double tokens_per_step_mean = 28.0;
  LatencyParams latency;

  void validate() const {
    if (answer_space < 2) throw ConfigError("world.answer_space must be >= 2");
    if (embedding_dim < 1) throw ConfigError("world.embedding_dim must be >= 1");
    if (!(difficulty_alpha > 0.0)) throw ConfigError("world.difficulty_alpha must be > 0");
    if (!(difficulty_beta > 0.0)) throw ConfigError("world.difficulty_beta must be > 0");
    if (!(skill_slope > 0.0)) throw ConfigError("world.skill_slope must be > 0");
    if (!(step_gain > 0.0 && step_gain <= 1.0)) {
      throw ConfigError("world.step_gain must be in (0, 1]");
    }
    if (!(reward_noise >= 0.0)) throw ConfigError("world.reward_noise must be >= 0");
    if (!(prm_noise >= 0.0)) throw ConfigError("world.prm_noise must be >= 0");
    if (!(tokens_per_candidate_mean > 0.0)) {
      throw ConfigError("world.tokens_per_candidate_mean must be > 0");
    }
    if (!(tokens_per_step_mean > 0.0)) {
      throw ConfigError("world.tokens_per_step_mean must be > 0");
    }
    latency.validate();
  }
};

struct QueryInstance {
  QueryId query_id = 0;
  double difficulty = 0.0;  // d in [0, 1]
  std::vector<double> embedding;
  int query_len = 0;  // prompt tokens
  AnswerId truth = 0;
};

// Partial beam-search solution. Owned and advanced by the beam engine;
// the world supplies the step dynamics.
struct BeamState {
  double partial_quality = 0.0;
  int steps_taken = 0;
  bool terminal = false;
  std::int64_t tokens_so_far = 0;
  std::optional<AnswerId> final_answer;
};

namespace detail {

// Stream salts keeping query sampling, trace generation and evaluation runs
// on independent substreams of one world seed.
inline constexpr std::uint64_t kSaltQuery = 0x7175657279ULL;
inline constexpr std::uint64_t kSaltTrace = 0x7472616365ULL;
inline constexpr std::uint64_t kSaltEval = 0x6576616cULL;

// Beams terminate with probability steps/kSoftDepth per step.
inline constexpr double kSoftDepth = 8.0;
inline constexpr int kBumpCount = 8;
inline constexpr double kBumpWidth = 0.15;
inline constexpr double kEmbeddingNoise = 0.1;

inline std::uint64_t strategy_stream_key(const Strategy& s) {
  return derive_seed(static_cast<std::uint64_t>(s.method),
                     static_cast<std::uint64_t>(s.n),
                     static_cast<std::uint64_t>(s.width.value_or(0)),
                     static_cast<std::uint64_t>(s.depth.value_or(0)));
}

}  // namespace detail

inline Rng query_rng(const WorldConfig& world, QueryId id) {
  return Rng(derive_seed(world.seed, detail::kSaltQuery, id));
}

inline Rng run_rng(const WorldConfig& world, QueryId id, const Strategy& s,
                   int repeat, bool eval_stream = false) {
  const std::uint64_t salt = eval_stream ? detail::kSaltEval : detail::kSaltTrace;
  return Rng(derive_seed(world.seed, salt, id, detail::strategy_stream_key(s),
                         static_cast<std::uint64_t>(repeat)));
}

// Single-sample success probability; the world's difficulty law.
inline double single_sample_accuracy(const WorldConfig& world, double difficulty) {
  return sigmoid(world.base_skill - world.skill_slope * difficulty);
}

// Mean of the next quality-walk increment. Positive on hard queries: guided
// step-level search is where extra structure pays off, while easy queries
// are already solved by independent sampling.
inline double step_drift(const WorldConfig& world, double difficulty) {
  return world.step_gain * difficulty - 0.5 * world.step_gain;
}

inline std::vector<QueryInstance> sample_queries(const WorldConfig& world, int count,
                                                 QueryId first_id = 0) {
  world.validate();
  if (count < 1) throw std::invalid_argument("sample_queries: count must be >= 1");
  std::vector<QueryInstance> queries;
  queries.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const QueryId id = first_id + static_cast<QueryId>(i);
    Rng rng = query_rng(world, id);
    QueryInstance q;
    q.query_id = id;
    q.difficulty = rng.beta(world.difficulty_alpha, world.difficulty_beta);
    q.truth = static_cast<AnswerId>(
        rng.uniform_index(static_cast<std::uint64_t>(world.answer_space)));
    q.embedding.resize(static_cast<std::size_t>(world.embedding_dim));
    for (int e = 0; e < world.embedding_dim; ++e) {
      const int bump = e % detail::kBumpCount;
      const double center =
          static_cast<double>(bump) / static_cast<double>(detail::kBumpCount - 1);
      const double z = (q.difficulty - center) / detail::kBumpWidth;
      q.embedding[static_cast<std::size_t>(e)] =
          std::exp(-0.5 * z * z) + rng.gaussian(0.0, detail::kEmbeddingNoise);
    }
    q.query_len = static_cast<int>(std::lround(32.0 + 96.0 * q.difficulty));
    queries.push_back(std::move(q));
  }
  return queries;
}

// One independent candidate solution: final answer plus its token cost.
inline std::pair<AnswerId, std::int64_t> generate_candidate(const WorldConfig& world,
                                                            const QueryInstance& query,
                                                            Rng& rng) {
  const double p1 = single_sample_accuracy(world, query.difficulty);
  const bool correct = rng.bernoulli(p1);
  AnswerId answer = query.truth;
  if (!correct) {
    const auto wrong = static_cast<AnswerId>(
        rng.uniform_index(static_cast<std::uint64_t>(world.answer_space - 1)));
    answer = wrong >= query.truth ? wrong + 1 : wrong;
  }
  const double token_mean = std::max(0.0, world.tokens_per_candidate_mean - 1.0);
  const auto tokens = static_cast<std::int64_t>(1 + rng.poisson(token_mean));
  return {answer, tokens};
}

struct StepResult {
  BeamState partial;
  std::int64_t step_tokens = 0;
  double step_quality = 0.0;
};

// Advance one partial solution by one step of the quality random walk.
inline StepResult generate_step(const WorldConfig& world, const QueryInstance& query,
                                const BeamState& parent, Rng& rng) {
  if (parent.terminal) throw StateError("generate_step: state is already terminal");
  StepResult out;
  out.step_quality =
      rng.gaussian(parent.partial_quality + step_drift(world, query.difficulty), 0.25);
  const double token_mean = std::max(0.0, world.tokens_per_step_mean - 1.0);
  out.step_tokens = static_cast<std::int64_t>(1 + rng.poisson(token_mean));

  out.partial.partial_quality = out.step_quality;
  out.partial.steps_taken = parent.steps_taken + 1;
  out.partial.tokens_so_far = parent.tokens_so_far + out.step_tokens;
  const double p_term =
      std::min(1.0, static_cast<double>(out.partial.steps_taken) / detail::kSoftDepth);
  out.partial.terminal = rng.bernoulli(p_term);
  if (out.partial.terminal) {
    const double p_correct = sigmoid(world.base_skill -
                                     world.skill_slope * query.difficulty +
                                     out.step_quality);
    AnswerId answer = query.truth;
    if (!rng.bernoulli(p_correct)) {
      const auto wrong = static_cast<AnswerId>(
          rng.uniform_index(static_cast<std::uint64_t>(world.answer_space - 1)));
      answer = wrong >= query.truth ? wrong + 1 : wrong;
    }
    out.partial.final_answer = answer;
  }
  return out;
}

// Finish a partial that hit the depth limit with one completion draw.
// Token cost matches a full candidate completion.
inline StepResult force_terminate(const WorldConfig& world, const QueryInstance& query,
                                  const BeamState& parent, Rng& rng) {
  if (parent.terminal) throw StateError("force_terminate: state is already terminal");
  StepResult out;
  out.step_quality = parent.partial_quality;
  const double token_mean = std::max(0.0, world.tokens_per_candidate_mean - 1.0);
  out.step_tokens = static_cast<std::int64_t>(1 + rng.poisson(token_mean));

  out.partial = parent;
  out.partial.tokens_so_far = parent.tokens_so_far + out.step_tokens;
  out.partial.terminal = true;
  const double p_correct = sigmoid(world.base_skill -
                                   world.skill_slope * query.difficulty +
                                   parent.partial_quality);
  AnswerId answer = query.truth;
  if (!rng.bernoulli(p_correct)) {
    const auto wrong = static_cast<AnswerId>(
        rng.uniform_index(static_cast<std::uint64_t>(world.answer_space - 1)));
    answer = wrong >= query.truth ? wrong + 1 : wrong;
  }
  out.partial.final_answer = answer;
  return out;
}

// Noisy reward of a complete answer.
inline double score_final(const WorldConfig& world, const QueryInstance& query,
                          AnswerId answer, Rng& rng) {
  const double base = answer == query.truth ? 1.0 : 0.0;
  return base + rng.gaussian(0.0, world.reward_noise);
}

// Noisy process-reward score of one step.
inline double score_step(const WorldConfig& world, double step_quality, Rng& rng) {
  return step_quality + rng.gaussian(0.0, world.prm_noise);
}

// One batched generate+score call over n parallel candidates.
struct ParallelCall {
  int n = 1;
  std::int64_t max_tokens = 0;
  int score_candidates = 0;
};

// One incremental decoding step over the currently active partials.
struct StepCall {
  int active_partials = 0;
  std::int64_t max_step_tokens = 0;
};

inline double charge_latency(const LatencyParams& params, const ParallelCall& call) {
  return params.setup_s + params.per_token_s * static_cast<double>(call.max_tokens) +
         params.parallel_n_s * static_cast<double>(call.n) + params.score_call_s +
         params.score_per_candidate_s * static_cast<double>(call.score_candidates);
}

inline double charge_latency(const LatencyParams& params,
                             std::span<const StepCall> steps) {
  double total = 0.0;
  for (const StepCall& step : steps) {
    total += params.setup_s +
             params.per_token_s * static_cast<double>(step.max_step_tokens) +
             params.parallel_n_s * static_cast<double>(step.active_partials) +
             params.score_call_s +
             params.score_per_candidate_s * static_cast<double>(step.active_partials);
  }
  return total;
}

}  // namespace itsr
