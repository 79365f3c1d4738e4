#pragma once

// Per-query strategy selection: s*(x) maximizes predicted utility
// accuracy - lambda_t * tokens - lambda_l * latency over a strategy set.
// Ties break toward lower latency, then lower tokens, then earlier position
// in the set's canonical order. Also provides the oracle router (true
// outcomes instead of predictions) and static single-strategy policies.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "itsr/cost_model.hpp"
#include "itsr/errors.hpp"
#include "itsr/probe.hpp"
#include "itsr/strategy.hpp"

namespace itsr {

struct StrategySet {
  std::vector<Strategy> strategies;

  void validate() const {
    if (strategies.empty()) throw ConfigError("strategy set must be nonempty");
    std::set<Strategy> seen;
    for (const auto& s : strategies) {
      s.validate();
      if (!seen.insert(s).second) {
        throw ConfigError("strategy set contains duplicate " + s.name());
      }
    }
  }
};

// Sampling methods crossed with n in {1,2,4,8,16}, plus beam search with
// width 4 and depth 40 at n in {2,4,8,16}.
inline StrategySet default_strategy_set() {
  StrategySet set;
  for (const Method method :
       {Method::MajorityVote, Method::BestOfNNaive, Method::BestOfNWeighted}) {
    for (const int n : {1, 2, 4, 8, 16}) {
      set.strategies.push_back(Strategy::sampling(method, n));
    }
  }
  for (const int n : {2, 4, 8, 16}) {
    set.strategies.push_back(Strategy::beam_search(n, 4, 40));
  }
  return set;
}

// Restricted beam-only set for the single-method adaptation mode.
inline StrategySet default_beam_only_set() {
  StrategySet set;
  for (const int n : {2, 4, 8}) {
    for (const int width : {2, 4}) {
      set.strategies.push_back(Strategy::beam_search(n, width, 40));
    }
  }
  return set;
}

struct StrategyUtility {
  Strategy strategy;
  double accuracy = 0.0;
  double tokens = 0.0;
  double latency = 0.0;
  double utility = 0.0;
};

struct RoutingDecision {
  QueryId query_id = 0;
  Strategy chosen;
  StrategyUtility predicted;
  std::vector<StrategyUtility> per_strategy_utilities;
};

namespace detail {

inline bool beats(const StrategyUtility& challenger, const StrategyUtility& incumbent) {
  if (challenger.utility != incumbent.utility)
    return challenger.utility > incumbent.utility;
  if (challenger.latency != incumbent.latency)
    return challenger.latency < incumbent.latency;
  return challenger.tokens < incumbent.tokens;
}

inline RoutingDecision select(QueryId query_id, std::vector<StrategyUtility> utilities) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < utilities.size(); ++i) {
    if (beats(utilities[i], utilities[best])) best = i;
  }
  RoutingDecision decision;
  decision.query_id = query_id;
  decision.chosen = utilities[best].strategy;
  decision.predicted = utilities[best];
  decision.per_strategy_utilities = std::move(utilities);
  return decision;
}

}  // namespace detail

inline RoutingDecision route(const QueryInstance& query, const StrategySet& set,
                             const ProbeModel& probe, const CostTable& costs,
                             const PenaltyWeights& weights) {
  set.validate();
  std::vector<StrategyUtility> utilities;
  utilities.reserve(set.strategies.size());
  for (const auto& strategy : set.strategies) {
    const auto [tokens, latency] = predict_cost(costs, strategy);
    StrategyUtility u;
    u.strategy = strategy;
    u.accuracy = predict(probe, query, strategy);
    u.tokens = tokens;
    u.latency = latency;
    u.utility = utility(u.accuracy, tokens, latency, weights);
    utilities.push_back(u);
  }
  return detail::select(query.query_id, std::move(utilities));
}

struct TrueOutcome {
  double accuracy = 0.0;
  double tokens = 0.0;
  double latency = 0.0;
};

inline RoutingDecision oracle_route(QueryId query_id, const StrategySet& set,
                                    const std::map<Strategy, TrueOutcome>& outcomes,
                                    const PenaltyWeights& weights) {
  set.validate();
  std::vector<StrategyUtility> utilities;
  utilities.reserve(set.strategies.size());
  for (const auto& strategy : set.strategies) {
    const auto it = outcomes.find(strategy);
    if (it == outcomes.end()) {
      throw std::invalid_argument("oracle_route: missing true outcome for " +
                                  strategy.name());
    }
    StrategyUtility u;
    u.strategy = strategy;
    u.accuracy = it->second.accuracy;
    u.tokens = it->second.tokens;
    u.latency = it->second.latency;
    u.utility = utility(u.accuracy, u.tokens, u.latency, weights);
    utilities.push_back(u);
  }
  return detail::select(query_id, std::move(utilities));
}

using Policy = std::function<Strategy(const QueryInstance&)>;

inline Policy static_policy(const Strategy& strategy) {
  strategy.validate();
  return [strategy](const QueryInstance&) { return strategy; };
}

inline Policy adaptive_policy(StrategySet set, ProbeModel probe, CostTable costs,
                              PenaltyWeights weights) {
  set.validate();
  return [set = std::move(set), probe = std::move(probe), costs = std::move(costs),
          weights](const QueryInstance& query) {
    return route(query, set, probe, costs, weights).chosen;
  };
}

}  // namespace itsr
