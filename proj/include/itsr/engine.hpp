#pragma once

// The four inference-time scaling methods executed against the simulated
// world. Selector primitives (majority vote, best-of-n) are pure functions
// over candidate lists; beam search drives the world's step dynamics and
// records an incremental latency trace.

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "itsr/rng.hpp"
#include "itsr/simworld.hpp"
#include "itsr/strategy.hpp"

namespace itsr {

// Modal answer; ties broken by smallest answer id.
inline AnswerId majority_vote(std::span<const AnswerId> answers) {
  if (answers.empty()) throw std::invalid_argument("majority_vote: empty answer list");
  std::map<AnswerId, int> counts;
  for (AnswerId a : answers) ++counts[a];
  AnswerId best = counts.begin()->first;
  int best_count = counts.begin()->second;
  for (const auto& [answer, count] : counts) {
    if (count > best_count) {
      best = answer;
      best_count = count;
    }
  }
  return best;
}

using ScoredCandidate = std::pair<AnswerId, double>;

// Answer of the highest-scoring candidate; ties broken by earliest index.
inline AnswerId best_of_n_naive(std::span<const ScoredCandidate> candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("best_of_n_naive: empty candidate list");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].second > candidates[best].second) best = i;
  }
  return candidates[best].first;
}

// Argmax over distinct answers of summed scores; ties broken by smallest id.
inline AnswerId best_of_n_weighted(std::span<const ScoredCandidate> candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("best_of_n_weighted: empty candidate list");
  }
  std::map<AnswerId, double> sums;
  for (const auto& [answer, score] : candidates) sums[answer] += score;
  AnswerId best = sums.begin()->first;
  double best_sum = sums.begin()->second;
  for (const auto& [answer, sum] : sums) {
    if (sum > best_sum) {
      best = answer;
      best_sum = sum;
    }
  }
  return best;
}

struct BeamResult {
  std::vector<AnswerId> finals;  // one answer per retained beam
  std::int64_t tokens = 0;       // every generated sequence, pruned ones included
  std::vector<StepCall> latency_trace;
  std::vector<std::int64_t> expansion_tokens;  // per-sequence log backing `tokens`
};

// PRM-guided beam search. Keeps n active beams; each step expands every
// non-terminal beam into `width` continuations, scores them, and retains the
// top n of (continuations + carried terminals). Terminal beams keep the
// frozen score from the step that created them. After `depth` steps any
// still-open beam is finished with a single completion draw.
inline BeamResult beam_search(const WorldConfig& world, const QueryInstance& query,
                              int n, int width, int depth, Rng& rng) {
  if (n < 1 || width < 1 || depth < 1) {
    throw std::invalid_argument("beam_search: n, width, depth must all be >= 1");
  }

  struct Beam {
    BeamState state;
    double last_score = 0.0;
  };

  BeamResult result;
  std::vector<Beam> active(static_cast<std::size_t>(n));

  for (int step = 0; step < depth; ++step) {
    const bool all_terminal =
        std::all_of(active.begin(), active.end(),
                    [](const Beam& b) { return b.state.terminal; });
    if (all_terminal) break;

    // Pool order doubles as the tie-break: carried terminals were expanded
    // in earlier steps, fresh continuations follow in generation order.
    std::vector<Beam> pool;
    pool.reserve(active.size() * static_cast<std::size_t>(width));
    for (const Beam& beam : active) {
      if (beam.state.terminal) pool.push_back(beam);
    }
    int generated = 0;
    std::int64_t max_step_tokens = 0;
    for (const Beam& beam : active) {
      if (beam.state.terminal) continue;
      for (int w = 0; w < width; ++w) {
        StepResult step_result = generate_step(world, query, beam.state, rng);
        result.tokens += step_result.step_tokens;
        result.expansion_tokens.push_back(step_result.step_tokens);
        max_step_tokens = std::max(max_step_tokens, step_result.step_tokens);
        ++generated;
        Beam child;
        child.state = std::move(step_result.partial);
        child.last_score = score_step(world, step_result.step_quality, rng);
        pool.push_back(std::move(child));
      }
    }
    result.latency_trace.push_back(StepCall{generated, max_step_tokens});

    std::stable_sort(pool.begin(), pool.end(), [](const Beam& a, const Beam& b) {
      return a.last_score > b.last_score;
    });
    pool.resize(static_cast<std::size_t>(n));
    active = std::move(pool);
  }

  // Depth exhausted: run the remaining open beams to completion in one call.
  int forced = 0;
  std::int64_t max_forced_tokens = 0;
  for (Beam& beam : active) {
    if (beam.state.terminal) continue;
    StepResult finish = force_terminate(world, query, beam.state, rng);
    result.tokens += finish.step_tokens;
    result.expansion_tokens.push_back(finish.step_tokens);
    max_forced_tokens = std::max(max_forced_tokens, finish.step_tokens);
    ++forced;
    beam.state = std::move(finish.partial);
  }
  if (forced > 0) {
    result.latency_trace.push_back(StepCall{forced, max_forced_tokens});
  }

  result.finals.reserve(active.size());
  for (const Beam& beam : active) result.finals.push_back(*beam.state.final_answer);
  return result;
}

// Execute one strategy on one query and account its full cost.
inline RunOutcome run_strategy(const WorldConfig& world, const QueryInstance& query,
                               const Strategy& strategy, Rng& rng) {
  strategy.validate();
  RunOutcome outcome;

  if (strategy.method == Method::BeamSearch) {
    BeamResult beams = beam_search(world, query, strategy.n, *strategy.width,
                                   *strategy.depth, rng);
    outcome.answer = majority_vote(beams.finals);
    outcome.tokens = beams.tokens;
    outcome.latency = charge_latency(world.latency, beams.latency_trace);
  } else {
    std::vector<AnswerId> answers;
    answers.reserve(static_cast<std::size_t>(strategy.n));
    std::int64_t max_tokens = 0;
    for (int i = 0; i < strategy.n; ++i) {
      auto [answer, tokens] = generate_candidate(world, query, rng);
      answers.push_back(answer);
      outcome.tokens += tokens;
      max_tokens = std::max(max_tokens, tokens);
    }
    if (strategy.method == Method::MajorityVote) {
      outcome.answer = majority_vote(answers);
      outcome.latency =
          charge_latency(world.latency, ParallelCall{strategy.n, max_tokens, 0});
    } else {
      std::vector<ScoredCandidate> scored;
      scored.reserve(answers.size());
      for (AnswerId answer : answers) {
        scored.emplace_back(answer, score_final(world, query, answer, rng));
      }
      outcome.answer = strategy.method == Method::BestOfNNaive
                           ? best_of_n_naive(scored)
                           : best_of_n_weighted(scored);
      outcome.latency = charge_latency(world.latency,
                                       ParallelCall{strategy.n, max_tokens, strategy.n});
    }
  }

  outcome.correct = outcome.answer == query.truth;
  return outcome;
}

}  // namespace itsr
