#pragma once

// Per-strategy cost model: predicted token and latency costs are
// repeat-weighted training-set means, looked up by exact strategy equality.
// Costs are query-independent by design; variation across queries is
// dominated by the choice of strategy.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>

#include "itsr/errors.hpp"
#include "itsr/strategy.hpp"

namespace itsr {

struct CostEntry {
  double mean_tokens = 0.0;
  double mean_latency = 0.0;
  std::int64_t support_count = 0;
};

struct CostTable {
  std::map<Strategy, CostEntry> entries;

  bool contains(const Strategy& strategy) const {
    return entries.find(strategy) != entries.end();
  }
};

inline CostTable fit_costs(std::span<const TraceRecord> records) {
  if (records.empty()) throw std::invalid_argument("fit_costs: empty input");
  struct Accumulator {
    double token_sum = 0.0;
    double latency_sum = 0.0;
    std::int64_t repeats = 0;
  };
  std::map<Strategy, Accumulator> acc;
  for (const auto& rec : records) {
    rec.validate();
    auto& slot = acc[rec.strategy];
    const auto w = static_cast<double>(rec.repeats);
    slot.token_sum += w * rec.mean_tokens;
    slot.latency_sum += w * rec.mean_latency;
    slot.repeats += rec.repeats;
  }
  CostTable table;
  for (const auto& [strategy, slot] : acc) {
    const auto w = static_cast<double>(slot.repeats);
    CostEntry entry{slot.token_sum / w, slot.latency_sum / w, slot.repeats};
    if (!std::isfinite(entry.mean_tokens) || !std::isfinite(entry.mean_latency)) {
      throw std::invalid_argument("fit_costs: non-finite mean for " + strategy.name());
    }
    table.entries.emplace(strategy, entry);
  }
  return table;
}

// Exact lookup; an absent strategy is a hard error so the router can never
// silently shrink its strategy set.
inline std::pair<double, double> predict_cost(const CostTable& table,
                                              const Strategy& strategy) {
  const auto it = table.entries.find(strategy);
  if (it == table.entries.end()) {
    throw UnknownStrategyError("predict_cost: no cost entry for " + strategy.name());
  }
  return {it->second.mean_tokens, it->second.mean_latency};
}

}  // namespace itsr
