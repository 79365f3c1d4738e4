// Strategy execution: the three selector primitives against hand cases and
// brute-force oracles, beam-search structure (token recount, latency trace,
// carryover, forced termination), and run_strategy cost accounting.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "itsr/engine.hpp"
#include "itsr/simworld.hpp"

using namespace itsr;

namespace {

QueryInstance fixed_query(double difficulty, AnswerId truth = 3) {
  QueryInstance q;
  q.query_id = 11;
  q.difficulty = difficulty;
  q.truth = truth;
  q.embedding.assign(32, 0.0);
  q.query_len = static_cast<int>(std::lround(32.0 + 96.0 * difficulty));
  return q;
}

AnswerId oracle_majority(const std::vector<AnswerId>& answers) {
  std::map<AnswerId, int> counts;
  for (AnswerId a : answers) ++counts[a];
  AnswerId best = answers.front();
  int best_count = -1;
  for (AnswerId a = -8; a <= 8; ++a) {
    const auto it = counts.find(a);
    if (it != counts.end() && it->second > best_count) {
      best = a;
      best_count = it->second;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("majority vote hand cases", "[engine]") {
  const std::vector<AnswerId> plain{2, 1, 2, 0};
  REQUIRE(majority_vote(plain) == 2);
  const std::vector<AnswerId> tie{3, 1, 3, 1};  // count tie -> smallest id
  REQUIRE(majority_vote(tie) == 1);
  const std::vector<AnswerId> single{5};
  REQUIRE(majority_vote(single) == 5);
  REQUIRE_THROWS_AS(majority_vote(std::vector<AnswerId>{}), std::invalid_argument);
}

TEST_CASE("best_of_n_naive picks the top score, earliest index on ties", "[engine]") {
  const std::vector<ScoredCandidate> plain{{0, 0.1}, {1, 0.9}, {2, 0.5}};
  REQUIRE(best_of_n_naive(plain) == 1);
  const std::vector<ScoredCandidate> tie{{4, 0.7}, {2, 0.7}, {9, 0.7}};
  REQUIRE(best_of_n_naive(tie) == 4);
  REQUIRE_THROWS_AS(best_of_n_naive(std::vector<ScoredCandidate>{}),
                    std::invalid_argument);
}

TEST_CASE("best_of_n_weighted sums scores per answer", "[engine]") {
  // answer 1 totals 0.8, answer 2 totals 0.9 despite a lower max
  const std::vector<ScoredCandidate> summed{{1, 0.8}, {2, 0.5}, {2, 0.4}};
  REQUIRE(best_of_n_weighted(summed) == 2);
  const std::vector<ScoredCandidate> tie{{7, 0.4}, {3, 0.4}};  // sum tie -> smallest id
  REQUIRE(best_of_n_weighted(tie) == 3);
  REQUIRE_THROWS_AS(best_of_n_weighted(std::vector<ScoredCandidate>{}),
                    std::invalid_argument);
}

TEST_CASE("selectors match brute-force oracles on random instances", "[engine]") {
  Rng rng(2024);
  for (int trial = 0; trial < 5000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(6));
    std::vector<AnswerId> answers;
    std::vector<ScoredCandidate> scored;
    for (int i = 0; i < n; ++i) {
      const auto a = static_cast<AnswerId>(rng.uniform_index(4));
      answers.push_back(a);
      // coarse grid scores force frequent exact ties
      scored.emplace_back(a, static_cast<double>(rng.uniform_index(4)) * 0.25);
    }
    REQUIRE(majority_vote(answers) == oracle_majority(answers));

    std::size_t naive_best = 0;
    for (std::size_t i = 1; i < scored.size(); ++i) {
      if (scored[i].second > scored[naive_best].second) naive_best = i;
    }
    REQUIRE(best_of_n_naive(scored) == scored[naive_best].first);

    std::map<AnswerId, double> sums;
    for (const auto& [a, s] : scored) sums[a] += s;
    AnswerId weighted_best = scored.front().first;
    double best_sum = -1e18;
    for (AnswerId a = 0; a < 4; ++a) {
      const auto it = sums.find(a);
      if (it != sums.end() && it->second > best_sum) {
        weighted_best = a;
        best_sum = it->second;
      }
    }
    REQUIRE(best_of_n_weighted(scored) == weighted_best);
  }
}

TEST_CASE("beam search keeps n finals, all terminal, tokens recounted", "[engine]") {
  WorldConfig world;
  const QueryInstance q = fixed_query(0.6);
  for (const auto [n, width, depth] :
       {std::tuple{1, 1, 40}, std::tuple{2, 2, 3}, std::tuple{4, 4, 40}}) {
    Rng rng(derive_seed(4, n, width, depth));
    const BeamResult result = beam_search(world, q, n, width, depth, rng);
    REQUIRE(result.finals.size() == static_cast<std::size_t>(n));
    for (AnswerId a : result.finals) {
      REQUIRE(a >= 0);
      REQUIRE(a < world.answer_space);
    }
    const std::int64_t recount = std::accumulate(result.expansion_tokens.begin(),
                                                 result.expansion_tokens.end(),
                                                 std::int64_t{0});
    REQUIRE(result.tokens == recount);
    REQUIRE(!result.latency_trace.empty());
    std::int64_t trace_generated = 0;
    for (const StepCall& step : result.latency_trace) {
      REQUIRE(step.active_partials >= 1);
      REQUIRE(step.active_partials <= n * width);
      REQUIRE(step.max_step_tokens >= 1);
      trace_generated += step.active_partials;
    }
    REQUIRE(trace_generated == static_cast<std::int64_t>(result.expansion_tokens.size()));
  }
}

TEST_CASE("beam search at depth 1 force-terminates the survivors", "[engine]") {
  WorldConfig world;
  const QueryInstance q = fixed_query(0.5);
  Rng rng(88);
  const BeamResult result = beam_search(world, q, 3, 2, 1, rng);
  REQUIRE(result.finals.size() == 3);
  // one expansion step plus one forced-completion call at most
  REQUIRE(result.latency_trace.size() <= 2);
  REQUIRE(result.latency_trace.front().active_partials == 6);
}

TEST_CASE("beam search rejects degenerate shapes", "[engine]") {
  WorldConfig world;
  const QueryInstance q = fixed_query(0.5);
  Rng rng(1);
  REQUIRE_THROWS_AS(beam_search(world, q, 0, 2, 3, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(beam_search(world, q, 2, 0, 3, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(beam_search(world, q, 2, 2, 0, rng), std::invalid_argument);
}

TEST_CASE("beam width one with one beam walks a single chain", "[engine]") {
  WorldConfig world;
  const QueryInstance q = fixed_query(0.4);
  Rng rng(19);
  const BeamResult result = beam_search(world, q, 1, 1, 40, rng);
  REQUIRE(result.finals.size() == 1);
  for (const StepCall& step : result.latency_trace) {
    REQUIRE(step.active_partials == 1);
  }
  // ramp caps the chain at 8 expansions
  REQUIRE(result.latency_trace.size() <= 8);
}

TEST_CASE("run_strategy is deterministic per rng seed", "[engine]") {
  WorldConfig world;
  const QueryInstance q = fixed_query(0.7);
  for (const Strategy& s :
       {Strategy::majority_vote(4), Strategy::best_of_n_naive(4),
        Strategy::best_of_n_weighted(4), Strategy::beam_search(2, 2, 40)}) {
    Rng a = run_rng(world, q.query_id, s, 0);
    Rng b = run_rng(world, q.query_id, s, 0);
    const RunOutcome oa = run_strategy(world, q, s, a);
    const RunOutcome ob = run_strategy(world, q, s, b);
    REQUIRE(oa.answer == ob.answer);
    REQUIRE(oa.tokens == ob.tokens);
    REQUIRE(oa.latency == ob.latency);
    REQUIRE(oa.correct == (oa.answer == q.truth));

    Rng c = run_rng(world, q.query_id, s, 1);
    const RunOutcome oc = run_strategy(world, q, s, c);
    REQUIRE((oc.tokens != oa.tokens || oc.latency != oa.latency || oc.answer != oa.answer));
  }
}

TEST_CASE("trace and eval streams are independent", "[engine]") {
  WorldConfig world;
  const QueryInstance q = fixed_query(0.5);
  const Strategy s = Strategy::majority_vote(8);
  Rng trace = run_rng(world, q.query_id, s, 0, /*eval_stream=*/false);
  Rng eval = run_rng(world, q.query_id, s, 0, /*eval_stream=*/true);
  const RunOutcome ot = run_strategy(world, q, s, trace);
  const RunOutcome oe = run_strategy(world, q, s, eval);
  REQUIRE(ot.tokens != oe.tokens);
}

TEST_CASE("sampling latency follows the parallel formula at n = 1", "[engine]") {
  WorldConfig world;
  const QueryInstance q = fixed_query(0.5);
  const LatencyParams& p = world.latency;

  Rng r1 = run_rng(world, q.query_id, Strategy::majority_vote(1), 0);
  const RunOutcome majority = run_strategy(world, q, Strategy::majority_vote(1), r1);
  REQUIRE(majority.latency ==
          Catch::Approx(p.setup_s + p.per_token_s * static_cast<double>(majority.tokens) +
                        p.parallel_n_s + p.score_call_s)
              .margin(1e-12));

  Rng r2 = run_rng(world, q.query_id, Strategy::best_of_n_naive(1), 0);
  const RunOutcome naive = run_strategy(world, q, Strategy::best_of_n_naive(1), r2);
  REQUIRE(naive.latency ==
          Catch::Approx(p.setup_s + p.per_token_s * static_cast<double>(naive.tokens) +
                        p.parallel_n_s + p.score_call_s + p.score_per_candidate_s)
              .margin(1e-12));
}

TEST_CASE("beam latency equals the charge of its own trace", "[engine]") {
  WorldConfig world;
  const QueryInstance q = fixed_query(0.8);
  const Strategy s = Strategy::beam_search(4, 4, 40);
  Rng for_result = run_rng(world, q.query_id, s, 2);
  Rng for_trace = run_rng(world, q.query_id, s, 2);
  const RunOutcome outcome = run_strategy(world, q, s, for_result);
  const BeamResult beams = beam_search(world, q, 4, 4, 40, for_trace);
  REQUIRE(outcome.latency ==
          Catch::Approx(charge_latency(world.latency, beams.latency_trace)).margin(1e-12));
  REQUIRE(outcome.tokens == beams.tokens);
}

TEST_CASE("noiseless reward makes best-of-n find any correct candidate", "[engine]") {
  WorldConfig world;
  world.reward_noise = 0.0;
  const QueryInstance q = fixed_query(0.5, 6);
  const Strategy s = Strategy::best_of_n_naive(8);
  int correct = 0;
  int any_correct = 0;
  for (int r = 0; r < 400; ++r) {
    Rng probe_rng = run_rng(world, q.query_id, s, r);
    // replay the candidate draws to know whether a correct one existed
    std::vector<AnswerId> answers;
    for (int i = 0; i < 8; ++i) {
      answers.push_back(generate_candidate(world, q, probe_rng).first);
    }
    Rng run = run_rng(world, q.query_id, s, r);
    const RunOutcome outcome = run_strategy(world, q, s, run);
    const bool exists =
        std::find(answers.begin(), answers.end(), q.truth) != answers.end();
    any_correct += exists;
    correct += outcome.correct;
    if (exists) REQUIRE(outcome.correct);
  }
  REQUIRE(correct == any_correct);
}
