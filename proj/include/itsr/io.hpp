#pragma once

// Artifact I/O: JSONL traces, probe/cost JSON, decision logs, and the
// plot-ready CSV reports. All writes are atomic (temp file + rename) and all
// numeric text is locale-independent ('.' decimal, shortest round-trip).
// Parsers reject unknown keys and cite line numbers so a corrupted artifact
// fails loudly instead of routing on garbage.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "itsr/cost_model.hpp"
#include "itsr/errors.hpp"
#include "itsr/harness.hpp"
#include "itsr/probe.hpp"
#include "itsr/router.hpp"
#include "itsr/strategy.hpp"

namespace itsr {

using nlohmann::json;

inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline void atomic_write_text(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() + ": " +
                    ec.message());
    }
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() +
                        ": " + ec.message());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace detail {

inline void require_keys(const json& obj,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional,
                         const std::string& what) {
  if (!obj.is_object()) throw ConfigError(what + ": expected a JSON object");
  for (const char* key : required) {
    if (!obj.contains(key)) throw ConfigError(what + ": missing key '" + key + "'");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* k : required) known = known || key == k;
    for (const char* k : optional) known = known || key == k;
    if (!known) throw ConfigError(what + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

inline json strategy_to_json(const Strategy& strategy) {
  json obj;
  obj["method"] = method_name(strategy.method);
  obj["n"] = strategy.n;
  if (strategy.width) obj["width"] = *strategy.width;
  if (strategy.depth) obj["depth"] = *strategy.depth;
  return obj;
}

inline Strategy strategy_from_json(const json& obj, const std::string& what) {
  detail::require_keys(obj, {"method", "n"}, {"width", "depth"}, what + ".strategy");
  Strategy strategy;
  try {
    strategy.method = method_from_name(obj.at("method").get<std::string>());
    strategy.n = obj.at("n").get<int>();
    if (obj.contains("width")) strategy.width = obj.at("width").get<int>();
    if (obj.contains("depth")) strategy.depth = obj.at("depth").get<int>();
    strategy.validate();
  } catch (const json::exception& e) {
    throw ConfigError(what + ".strategy: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ".strategy: " + e.what());
  }
  return strategy;
}

inline json trace_to_json(const TraceRecord& rec) {
  json obj;
  obj["strategy"] = strategy_to_json(rec.strategy);
  obj["query_id"] = rec.query_id;
  obj["features"] = rec.features;
  obj["soft_label"] = rec.soft_label;
  obj["mean_tokens"] = rec.mean_tokens;
  obj["mean_latency"] = rec.mean_latency;
  obj["repeats"] = rec.repeats;
  return obj;
}

inline TraceRecord trace_from_json(const json& obj, const std::string& what) {
  detail::require_keys(obj,
                       {"strategy", "query_id", "features", "soft_label",
                        "mean_tokens", "mean_latency", "repeats"},
                       {}, what);
  TraceRecord rec;
  rec.strategy = strategy_from_json(obj.at("strategy"), what);
  try {
    rec.query_id = obj.at("query_id").get<QueryId>();
    rec.features = obj.at("features").get<std::vector<double>>();
    rec.soft_label = obj.at("soft_label").get<double>();
    rec.mean_tokens = obj.at("mean_tokens").get<double>();
    rec.mean_latency = obj.at("mean_latency").get<double>();
    rec.repeats = obj.at("repeats").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
  try {
    rec.validate();
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
  return rec;
}

inline std::string traces_to_jsonl(std::span<const TraceRecord> records) {
  std::string out;
  for (const auto& rec : records) {
    out += trace_to_json(rec).dump();
    out += '\n';
  }
  return out;
}

inline void write_traces(const std::filesystem::path& path,
                         std::span<const TraceRecord> records) {
  atomic_write_text(path, traces_to_jsonl(records));
}

inline std::vector<TraceRecord> parse_traces(const std::string& text,
                                             const std::string& source) {
  std::vector<TraceRecord> records;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string what = source + " line " + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError(what + ": " + e.what());
    }
    records.push_back(trace_from_json(obj, what));
  }
  return records;
}

inline std::vector<TraceRecord> read_traces(const std::filesystem::path& path) {
  return parse_traces(read_text_file(path), path.filename().string());
}

inline json probe_to_json(const ProbeModel& model) {
  model.check_shapes();
  json obj;
  obj["in_dim"] = model.in_dim;
  obj["hidden1"] = model.hidden1;
  obj["hidden2"] = model.hidden2;
  obj["embedding_dim"] = model.embedding_dim;
  obj["w1"] = model.w1;
  obj["b1"] = model.b1;
  obj["w2"] = model.w2;
  obj["b2"] = model.b2;
  obj["w3"] = model.w3;
  obj["b3"] = model.b3;
  obj["feature_means"] = model.feature_means;
  obj["feature_stds"] = model.feature_stds;
  obj["platt_a"] = model.platt_a;
  obj["platt_b"] = model.platt_b;
  obj["trained"] = model.trained;
  return obj;
}

inline ProbeModel probe_from_json(const json& obj) {
  detail::require_keys(obj,
                       {"in_dim", "hidden1", "hidden2", "embedding_dim", "w1", "b1",
                        "w2", "b2", "w3", "b3", "feature_means", "feature_stds",
                        "platt_a", "platt_b", "trained"},
                       {}, "probe");
  ProbeModel model;
  try {
    model.in_dim = obj.at("in_dim").get<int>();
    model.hidden1 = obj.at("hidden1").get<int>();
    model.hidden2 = obj.at("hidden2").get<int>();
    model.embedding_dim = obj.at("embedding_dim").get<int>();
    model.w1 = obj.at("w1").get<std::vector<double>>();
    model.b1 = obj.at("b1").get<std::vector<double>>();
    model.w2 = obj.at("w2").get<std::vector<double>>();
    model.b2 = obj.at("b2").get<std::vector<double>>();
    model.w3 = obj.at("w3").get<std::vector<double>>();
    model.b3 = obj.at("b3").get<double>();
    model.feature_means = obj.at("feature_means").get<std::vector<double>>();
    model.feature_stds = obj.at("feature_stds").get<std::vector<double>>();
    model.platt_a = obj.at("platt_a").get<double>();
    model.platt_b = obj.at("platt_b").get<double>();
    model.trained = obj.at("trained").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("probe: ") + e.what());
  }
  try {
    model.check_shapes();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("probe: ") + e.what());
  }
  return model;
}

inline void write_probe(const std::filesystem::path& path, const ProbeModel& model) {
  atomic_write_text(path, probe_to_json(model).dump() + "\n");
}

inline ProbeModel read_probe(const std::filesystem::path& path) {
  json obj;
  try {
    obj = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return probe_from_json(obj);
}

inline json costs_to_json(const CostTable& table) {
  json arr = json::array();
  for (const auto& [strategy, entry] : table.entries) {
    json obj;
    obj["strategy"] = strategy_to_json(strategy);
    obj["mean_tokens"] = entry.mean_tokens;
    obj["mean_latency"] = entry.mean_latency;
    obj["support_count"] = entry.support_count;
    arr.push_back(std::move(obj));
  }
  return arr;
}

inline CostTable costs_from_json(const json& arr) {
  if (!arr.is_array()) throw ConfigError("costs: expected a JSON array");
  CostTable table;
  int idx = 0;
  for (const auto& obj : arr) {
    const std::string what = "costs[" + std::to_string(idx) + "]";
    detail::require_keys(obj, {"strategy", "mean_tokens", "mean_latency",
                               "support_count"},
                         {}, what);
    const Strategy strategy = strategy_from_json(obj.at("strategy"), what);
    CostEntry entry;
    try {
      entry.mean_tokens = obj.at("mean_tokens").get<double>();
      entry.mean_latency = obj.at("mean_latency").get<double>();
      entry.support_count = obj.at("support_count").get<std::int64_t>();
    } catch (const json::exception& e) {
      throw ConfigError(what + ": " + e.what());
    }
    if (entry.support_count < 1) {
      throw ConfigError(what + ": support_count must be >= 1");
    }
    if (!table.entries.emplace(strategy, entry).second) {
      throw ConfigError(what + ": duplicate strategy " + strategy.name());
    }
    ++idx;
  }
  return table;
}

inline void write_costs(const std::filesystem::path& path, const CostTable& table) {
  atomic_write_text(path, costs_to_json(table).dump(2) + "\n");
}

inline CostTable read_costs(const std::filesystem::path& path) {
  json arr;
  try {
    arr = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return costs_from_json(arr);
}

inline json decision_to_json(const RoutingDecision& decision) {
  const auto utility_to_json = [](const StrategyUtility& u) {
    json obj;
    obj["strategy"] = strategy_to_json(u.strategy);
    obj["accuracy"] = u.accuracy;
    obj["tokens"] = u.tokens;
    obj["latency"] = u.latency;
    obj["utility"] = u.utility;
    return obj;
  };
  json obj;
  obj["query_id"] = decision.query_id;
  obj["chosen"] = strategy_to_json(decision.chosen);
  obj["predicted"] = utility_to_json(decision.predicted);
  json arr = json::array();
  for (const auto& u : decision.per_strategy_utilities) {
    arr.push_back(utility_to_json(u));
  }
  obj["per_strategy_utilities"] = std::move(arr);
  return obj;
}

inline void write_decisions(const std::filesystem::path& path,
                            std::span<const RoutingDecision> decisions) {
  std::string out;
  for (const auto& d : decisions) {
    out += decision_to_json(d).dump();
    out += '\n';
  }
  atomic_write_text(path, out);
}

// sweep.csv: lambda_t, lambda_l, the realized means, then one share column
// per method and per n value present in the strategy set.
inline std::string sweep_to_csv(std::span<const SweepPoint> points) {
  if (points.empty()) throw std::invalid_argument("sweep_to_csv: no points");
  std::string out = "lambda_t,lambda_l,mean_accuracy,mean_tokens,mean_latency";
  for (const auto& [method, share] : points.front().method_shares) {
    out += ",share_";
    out += method_name(method);
  }
  for (const auto& [n, share] : points.front().n_shares) {
    out += ",share_n_" + std::to_string(n);
  }
  out += '\n';
  for (const auto& point : points) {
    out += format_double(point.weights.lambda_t);
    out += ',';
    out += format_double(point.weights.lambda_l);
    out += ',';
    out += format_double(point.mean_accuracy);
    out += ',';
    out += format_double(point.mean_tokens);
    out += ',';
    out += format_double(point.mean_latency);
    for (const auto& [method, share] : point.method_shares) {
      out += ',';
      out += format_double(share);
    }
    for (const auto& [n, share] : point.n_shares) {
      out += ',';
      out += format_double(share);
    }
    out += '\n';
  }
  return out;
}

inline void write_sweep_csv(const std::filesystem::path& path,
                            std::span<const SweepPoint> points) {
  atomic_write_text(path, sweep_to_csv(points));
}

inline std::string compare_to_csv(std::span<const CostModelComparePoint> points) {
  std::string out =
      "lambda_t,lambda_l,predicted_cost_utility,true_cost_utility,"
      "predicted_cost_accuracy,true_cost_accuracy,predicted_cost_tokens,"
      "true_cost_tokens,predicted_cost_latency,true_cost_latency\n";
  for (const auto& p : points) {
    out += format_double(p.weights.lambda_t);
    out += ',';
    out += format_double(p.weights.lambda_l);
    out += ',';
    out += format_double(p.with_predicted_costs.mean_utility);
    out += ',';
    out += format_double(p.with_true_costs.mean_utility);
    out += ',';
    out += format_double(p.with_predicted_costs.mean_accuracy);
    out += ',';
    out += format_double(p.with_true_costs.mean_accuracy);
    out += ',';
    out += format_double(p.with_predicted_costs.mean_tokens);
    out += ',';
    out += format_double(p.with_true_costs.mean_tokens);
    out += ',';
    out += format_double(p.with_predicted_costs.mean_latency);
    out += ',';
    out += format_double(p.with_true_costs.mean_latency);
    out += '\n';
  }
  return out;
}

inline void write_compare_csv(const std::filesystem::path& path,
                              std::span<const CostModelComparePoint> points) {
  atomic_write_text(path, compare_to_csv(points));
}

inline std::string baselines_to_csv(std::span<const StaticBaseline> baselines) {
  std::string out = "strategy,mean_accuracy,mean_tokens,mean_latency\n";
  for (const auto& b : baselines) {
    out += b.strategy.name();
    out += ',';
    out += format_double(b.eval.mean_accuracy);
    out += ',';
    out += format_double(b.eval.mean_tokens);
    out += ',';
    out += format_double(b.eval.mean_latency);
    out += '\n';
  }
  return out;
}

inline void write_baselines_csv(const std::filesystem::path& path,
                                std::span<const StaticBaseline> baselines) {
  atomic_write_text(path, baselines_to_csv(baselines));
}

inline void write_json_file(const std::filesystem::path& path, const json& obj) {
  atomic_write_text(path, obj.dump(2) + "\n");
}

}  // namespace itsr
