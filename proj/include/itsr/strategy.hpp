#pragma once

// Shared data model: decoding strategies, penalty weights, run outcomes and
// supervision traces, plus the scalar utility that routing maximizes.

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "itsr/errors.hpp"

namespace itsr {

using QueryId = std::uint64_t;
using AnswerId = std::int64_t;

// Canonical order of the enumerators doubles as the method tie-break order.
enum class Method : std::uint8_t {
  MajorityVote = 0,
  BestOfNNaive = 1,
  BestOfNWeighted = 2,
  BeamSearch = 3,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::MajorityVote: return "majority_vote";
    case Method::BestOfNNaive: return "best_of_n_naive";
    case Method::BestOfNWeighted: return "best_of_n_weighted";
    case Method::BeamSearch: return "beam_search";
  }
  throw std::invalid_argument("method_name: bad Method value");
}

inline Method method_from_name(const std::string& name) {
  if (name == "majority_vote") return Method::MajorityVote;
  if (name == "best_of_n_naive") return Method::BestOfNNaive;
  if (name == "best_of_n_weighted") return Method::BestOfNWeighted;
  if (name == "beam_search") return Method::BeamSearch;
  throw std::invalid_argument("unknown method name: " + name);
}

// A decoding method plus its hyperparameters. width/depth are present iff
// method == BeamSearch. Full-field equality keys the cost model.
struct Strategy {
  Method method = Method::MajorityVote;
  int n = 1;
  std::optional<int> width;
  std::optional<int> depth;

  static Strategy sampling(Method method, int n) {
    if (method == Method::BeamSearch) {
      throw std::invalid_argument("Strategy::sampling: beam_search needs width/depth");
    }
    return {method, n, {}, {}};
  }
  static Strategy majority_vote(int n) { return {Method::MajorityVote, n, {}, {}}; }
  static Strategy best_of_n_naive(int n) { return {Method::BestOfNNaive, n, {}, {}}; }
  static Strategy best_of_n_weighted(int n) { return {Method::BestOfNWeighted, n, {}, {}}; }
  static Strategy beam_search(int n, int width, int depth) {
    return {Method::BeamSearch, n, width, depth};
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("Strategy: n must be >= 1");
    const bool beam = method == Method::BeamSearch;
    if (beam != width.has_value() || beam != depth.has_value()) {
      throw std::invalid_argument(
          "Strategy: width/depth present iff method is beam_search");
    }
    if (width && *width < 1) throw std::invalid_argument("Strategy: width must be >= 1");
    if (depth && *depth < 1) throw std::invalid_argument("Strategy: depth must be >= 1");
  }

  friend bool operator==(const Strategy&, const Strategy&) = default;

  // Total order: method, then n, then width (absent < present), then depth.
  friend std::strong_ordering operator<=>(const Strategy& a, const Strategy& b) {
    if (auto c = a.method <=> b.method; c != 0) return c;
    if (auto c = a.n <=> b.n; c != 0) return c;
    if (auto c = a.width <=> b.width; c != 0) return c;
    return a.depth <=> b.depth;
  }

  std::string name() const {
    std::string s = method_name(method);
    s += "_n" + std::to_string(n);
    if (width) s += "_w" + std::to_string(*width);
    if (depth) s += "_d" + std::to_string(*depth);
    return s;
  }
};

// Per-token and per-second utility penalties.
struct PenaltyWeights {
  double lambda_t = 0.0;
  double lambda_l = 0.0;

  void validate() const {
    if (!(lambda_t >= 0.0) || !(lambda_l >= 0.0)) {
      throw std::invalid_argument("PenaltyWeights: lambdas must be >= 0");
    }
  }
};

// Result of executing one strategy on one query.
struct RunOutcome {
  AnswerId answer = 0;
  bool correct = false;
  std::int64_t tokens = 0;   // total over every generated sequence
  double latency = 0.0;      // simulated seconds
};

// Supervision tuple for probe and cost-model training.
struct TraceRecord {
  Strategy strategy;
  QueryId query_id = 0;
  std::vector<double> features;  // embedding ++ contextual, raw (unstandardized)
  double soft_label = 0.0;       // fraction of correct repeats
  double mean_tokens = 0.0;
  double mean_latency = 0.0;
  int repeats = 1;

  void validate() const {
    strategy.validate();
    if (repeats < 1) throw std::invalid_argument("TraceRecord: repeats must be >= 1");
    if (!(soft_label >= 0.0 && soft_label <= 1.0)) {
      throw std::invalid_argument("TraceRecord: soft_label must be in [0,1]");
    }
    const double scaled = soft_label * repeats;
    if (std::abs(scaled - std::round(scaled)) > 1e-9) {
      throw std::invalid_argument(
          "TraceRecord: soft_label * repeats must be an integer");
    }
    if (!(mean_tokens >= 0.0)) throw std::invalid_argument("TraceRecord: mean_tokens < 0");
    if (!(mean_latency > 0.0)) throw std::invalid_argument("TraceRecord: mean_latency <= 0");
  }
};

// U = accuracy - lambda_t * tokens - lambda_l * latency, in that association
// order, exact IEEE double arithmetic.
inline double utility(double accuracy, double tokens, double latency,
                      const PenaltyWeights& weights) {
  if (!std::isfinite(accuracy) || !std::isfinite(tokens) || !std::isfinite(latency) ||
      !std::isfinite(weights.lambda_t) || !std::isfinite(weights.lambda_l)) {
    throw std::invalid_argument("utility: inputs must be finite");
  }
  return accuracy - weights.lambda_t * tokens - weights.lambda_l * latency;
}

}  // namespace itsr
