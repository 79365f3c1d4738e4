#pragma once

// Experiment pipeline: trace generation for probe/cost training, true-outcome
// measurement on a held-out evaluation stream, policy evaluation, lambda-grid
// sweeps with routing-share reporting, and the predicted-vs-true cost model
// comparison.
//
// All evaluation paths (adaptive, static, oracle, cost comparison) read the
// same per-(query, strategy) outcome table, measured once on the evaluation
// RNG stream. Oracle dominance over static policies is then exact argmax
// dominance on identical numbers rather than a statistical statement.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "itsr/cost_model.hpp"
#include "itsr/engine.hpp"
#include "itsr/probe.hpp"
#include "itsr/router.hpp"
#include "itsr/simworld.hpp"
#include "itsr/strategy.hpp"

namespace itsr {

namespace detail {

struct RepeatSummary {
  double soft_label = 0.0;
  double mean_tokens = 0.0;
  double mean_latency = 0.0;
};

inline RepeatSummary run_repeats(const WorldConfig& world, const QueryInstance& query,
                                 const Strategy& strategy, int repeats,
                                 bool eval_stream) {
  RepeatSummary summary;
  for (int r = 0; r < repeats; ++r) {
    Rng rng = run_rng(world, query.query_id, strategy, r, eval_stream);
    const RunOutcome outcome = run_strategy(world, query, strategy, rng);
    summary.soft_label += outcome.correct ? 1.0 : 0.0;
    summary.mean_tokens += static_cast<double>(outcome.tokens);
    summary.mean_latency += outcome.latency;
  }
  const auto inv = 1.0 / static_cast<double>(repeats);
  summary.soft_label *= inv;
  summary.mean_tokens *= inv;
  summary.mean_latency *= inv;
  return summary;
}

}  // namespace detail

// One record per (query, strategy): soft label is the fraction of the R
// repeated runs that answered correctly; costs are sample means.
inline std::vector<TraceRecord> generate_traces(const WorldConfig& world,
                                                std::span<const QueryInstance> queries,
                                                const StrategySet& set, int repeats) {
  set.validate();
  if (repeats < 1) throw std::invalid_argument("generate_traces: repeats must be >= 1");
  std::vector<TraceRecord> records;
  records.reserve(queries.size() * set.strategies.size());
  for (const auto& query : queries) {
    for (const auto& strategy : set.strategies) {
      const auto summary =
          detail::run_repeats(world, query, strategy, repeats, /*eval_stream=*/false);
      TraceRecord rec;
      rec.strategy = strategy;
      rec.query_id = query.query_id;
      rec.features = assemble_features(query, strategy);
      rec.soft_label = summary.soft_label;
      rec.mean_tokens = summary.mean_tokens;
      rec.mean_latency = summary.mean_latency;
      rec.repeats = repeats;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

// True outcomes per (query, strategy), measured on the evaluation stream so
// they are independent of the training traces.
struct OutcomeTable {
  std::map<QueryId, std::map<Strategy, TrueOutcome>> rows;

  const std::map<Strategy, TrueOutcome>& row(QueryId id) const {
    const auto it = rows.find(id);
    if (it == rows.end()) {
      throw std::invalid_argument("outcome table: no row for query " +
                                  std::to_string(id));
    }
    return it->second;
  }

  const TrueOutcome& at(QueryId id, const Strategy& strategy) const {
    const auto& r = row(id);
    const auto it = r.find(strategy);
    if (it == r.end()) {
      throw std::invalid_argument("outcome table: no outcome for " + strategy.name() +
                                  " on query " + std::to_string(id));
    }
    return it->second;
  }
};

inline OutcomeTable measure_true_outcomes(const WorldConfig& world,
                                          std::span<const QueryInstance> queries,
                                          const StrategySet& set, int repeats) {
  set.validate();
  if (repeats < 1) {
    throw std::invalid_argument("measure_true_outcomes: repeats must be >= 1");
  }
  OutcomeTable table;
  for (const auto& query : queries) {
    auto& row = table.rows[query.query_id];
    for (const auto& strategy : set.strategies) {
      const auto summary =
          detail::run_repeats(world, query, strategy, repeats, /*eval_stream=*/true);
      row.emplace(strategy,
                  TrueOutcome{summary.soft_label, summary.mean_tokens,
                              summary.mean_latency});
    }
  }
  return table;
}

struct PolicyEval {
  double mean_accuracy = 0.0;
  double mean_tokens = 0.0;
  double mean_latency = 0.0;
  double mean_utility = 0.0;
};

// Evaluates a policy against the shared outcome table; mean_utility is the
// mean of per-query utilities (not the utility of the means), so argmax
// dominance survives aggregation exactly.
inline PolicyEval evaluate_policy(const Policy& policy,
                                  std::span<const QueryInstance> queries,
                                  const OutcomeTable& outcomes,
                                  const PenaltyWeights& weights) {
  if (queries.empty()) throw std::invalid_argument("evaluate_policy: no queries");
  PolicyEval eval;
  for (const auto& query : queries) {
    const Strategy chosen = policy(query);
    const TrueOutcome& outcome = outcomes.at(query.query_id, chosen);
    eval.mean_accuracy += outcome.accuracy;
    eval.mean_tokens += outcome.tokens;
    eval.mean_latency += outcome.latency;
    eval.mean_utility += utility(outcome.accuracy, outcome.tokens, outcome.latency,
                                 weights);
  }
  const auto inv = 1.0 / static_cast<double>(queries.size());
  eval.mean_accuracy *= inv;
  eval.mean_tokens *= inv;
  eval.mean_latency *= inv;
  eval.mean_utility *= inv;
  return eval;
}

inline PolicyEval evaluate_oracle(const StrategySet& set,
                                  std::span<const QueryInstance> queries,
                                  const OutcomeTable& outcomes,
                                  const PenaltyWeights& weights) {
  Policy policy = [&](const QueryInstance& query) {
    return oracle_route(query.query_id, set, outcomes.row(query.query_id), weights)
        .chosen;
  };
  return evaluate_policy(policy, queries, outcomes, weights);
}

// Probe predictions for every (query, strategy) cell; rows parallel queries,
// columns parallel set.strategies. Predictions do not depend on the penalty
// weights, so sweeps reuse one matrix across the whole grid.
inline std::vector<std::vector<double>> predict_matrix(
    const ProbeModel& probe, std::span<const QueryInstance> queries,
    const StrategySet& set) {
  set.validate();
  std::vector<std::vector<double>> matrix;
  matrix.reserve(queries.size());
  for (const auto& query : queries) {
    std::vector<double> row;
    row.reserve(set.strategies.size());
    for (const auto& strategy : set.strategies) {
      row.push_back(predict(probe, query, strategy));
    }
    matrix.push_back(std::move(row));
  }
  return matrix;
}

namespace detail {

// Same selection rule as route(), fed from a cached prediction row and an
// arbitrary per-strategy cost source.
template <typename CostFn>
inline RoutingDecision select_with_costs(QueryId query_id, const StrategySet& set,
                                         std::span<const double> accuracies,
                                         CostFn&& cost_of,
                                         const PenaltyWeights& weights) {
  std::vector<StrategyUtility> utilities;
  utilities.reserve(set.strategies.size());
  for (std::size_t i = 0; i < set.strategies.size(); ++i) {
    const auto& strategy = set.strategies[i];
    const auto [tokens, latency] = cost_of(strategy);
    StrategyUtility u;
    u.strategy = strategy;
    u.accuracy = accuracies[i];
    u.tokens = tokens;
    u.latency = latency;
    u.utility = utility(u.accuracy, tokens, latency, weights);
    utilities.push_back(u);
  }
  return select(query_id, std::move(utilities));
}

}  // namespace detail

struct SweepPoint {
  PenaltyWeights weights;
  double mean_accuracy = 0.0;
  double mean_tokens = 0.0;
  double mean_latency = 0.0;
  std::map<Method, double> method_shares;
  std::map<int, double> n_shares;
};

// One point per (lambda_t, lambda_l) pair; the outer loop fixes lambda_l and
// the inner loop varies lambda_t, matching the emitted row order.
inline std::vector<SweepPoint> sweep(const ProbeModel& probe, const CostTable& costs,
                                     const StrategySet& set,
                                     std::span<const double> lambda_t_grid,
                                     std::span<const double> lambda_l_grid,
                                     std::span<const QueryInstance> queries,
                                     const OutcomeTable& outcomes) {
  if (lambda_t_grid.empty() || lambda_l_grid.empty()) {
    throw std::invalid_argument("sweep: grids must be nonempty");
  }
  if (queries.empty()) throw std::invalid_argument("sweep: no queries");
  const auto matrix = predict_matrix(probe, queries, set);

  std::vector<SweepPoint> points;
  points.reserve(lambda_t_grid.size() * lambda_l_grid.size());
  for (const double lambda_l : lambda_l_grid) {
    for (const double lambda_t : lambda_t_grid) {
      const PenaltyWeights weights{lambda_t, lambda_l};
      SweepPoint point;
      point.weights = weights;
      for (const auto& strategy : set.strategies) {
        point.method_shares[strategy.method] = 0.0;
        point.n_shares[strategy.n] = 0.0;
      }
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const auto decision = detail::select_with_costs(
            queries[q].query_id, set, matrix[q],
            [&](const Strategy& s) { return predict_cost(costs, s); }, weights);
        const TrueOutcome& outcome =
            outcomes.at(queries[q].query_id, decision.chosen);
        point.mean_accuracy += outcome.accuracy;
        point.mean_tokens += outcome.tokens;
        point.mean_latency += outcome.latency;
        point.method_shares[decision.chosen.method] += 1.0;
        point.n_shares[decision.chosen.n] += 1.0;
      }
      const auto inv = 1.0 / static_cast<double>(queries.size());
      point.mean_accuracy *= inv;
      point.mean_tokens *= inv;
      point.mean_latency *= inv;
      for (auto& [method, share] : point.method_shares) share *= inv;
      for (auto& [n, share] : point.n_shares) share *= inv;
      points.push_back(std::move(point));
    }
  }
  return points;
}

struct CostModelComparePoint {
  PenaltyWeights weights;
  PolicyEval with_predicted_costs;  // CostTable strategy means
  PolicyEval with_true_costs;       // per-query measured costs
};

// Routes with the probe's accuracy predictions under (a) cost-table means and
// (b) per-query true costs, and reports realized outcomes for both, per grid
// point. At lambda = (0, 0) the two coincide by construction.
inline std::vector<CostModelComparePoint> compare_cost_models(
    const ProbeModel& probe, const CostTable& costs, const StrategySet& set,
    std::span<const double> lambda_t_grid, std::span<const double> lambda_l_grid,
    std::span<const QueryInstance> queries, const OutcomeTable& outcomes) {
  if (lambda_t_grid.empty() || lambda_l_grid.empty()) {
    throw std::invalid_argument("compare_cost_models: grids must be nonempty");
  }
  if (queries.empty()) throw std::invalid_argument("compare_cost_models: no queries");
  const auto matrix = predict_matrix(probe, queries, set);

  std::vector<CostModelComparePoint> points;
  points.reserve(lambda_t_grid.size() * lambda_l_grid.size());
  for (const double lambda_l : lambda_l_grid) {
    for (const double lambda_t : lambda_t_grid) {
      const PenaltyWeights weights{lambda_t, lambda_l};
      CostModelComparePoint point;
      point.weights = weights;
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const QueryId id = queries[q].query_id;
        const auto predicted = detail::select_with_costs(
            id, set, matrix[q],
            [&](const Strategy& s) { return predict_cost(costs, s); }, weights);
        const auto oracle_costed = detail::select_with_costs(
            id, set, matrix[q],
            [&](const Strategy& s) {
              const TrueOutcome& o = outcomes.at(id, s);
              return std::pair<double, double>{o.tokens, o.latency};
            },
            weights);
        const TrueOutcome& a = outcomes.at(id, predicted.chosen);
        const TrueOutcome& b = outcomes.at(id, oracle_costed.chosen);
        point.with_predicted_costs.mean_accuracy += a.accuracy;
        point.with_predicted_costs.mean_tokens += a.tokens;
        point.with_predicted_costs.mean_latency += a.latency;
        point.with_predicted_costs.mean_utility +=
            utility(a.accuracy, a.tokens, a.latency, weights);
        point.with_true_costs.mean_accuracy += b.accuracy;
        point.with_true_costs.mean_tokens += b.tokens;
        point.with_true_costs.mean_latency += b.latency;
        point.with_true_costs.mean_utility +=
            utility(b.accuracy, b.tokens, b.latency, weights);
      }
      const auto inv = 1.0 / static_cast<double>(queries.size());
      for (PolicyEval* eval :
           {&point.with_predicted_costs, &point.with_true_costs}) {
        eval->mean_accuracy *= inv;
        eval->mean_tokens *= inv;
        eval->mean_latency *= inv;
        eval->mean_utility *= inv;
      }
      points.push_back(point);
    }
  }
  return points;
}

// Beam-only adaptation mode runs the identical pipeline on a restricted set;
// the restriction itself is the only extra contract.
inline void validate_beam_only(const StrategySet& set) {
  set.validate();
  for (const auto& strategy : set.strategies) {
    if (strategy.method != Method::BeamSearch) {
      throw std::invalid_argument("beam-only mode: set contains " + strategy.name());
    }
  }
}

struct StaticBaseline {
  Strategy strategy;
  PolicyEval eval;
};

// Per-strategy constant-policy results; utility reported at the given
// weights, the accuracy/cost triple is weight-independent.
inline std::vector<StaticBaseline> static_baselines(
    const StrategySet& set, std::span<const QueryInstance> queries,
    const OutcomeTable& outcomes, const PenaltyWeights& weights) {
  set.validate();
  std::vector<StaticBaseline> baselines;
  baselines.reserve(set.strategies.size());
  for (const auto& strategy : set.strategies) {
    baselines.push_back(
        {strategy, evaluate_policy(static_policy(strategy), queries, outcomes,
                                   weights)});
  }
  return baselines;
}

}  // namespace itsr
