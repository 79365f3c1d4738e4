#pragma once

// Run configuration: flat `key = value` text with dotted section prefixes
// (`world.seed = 7`), `#` comments, and comma-separated lists. Unknown keys
// and malformed values are hard errors naming the offending field and line.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "itsr/errors.hpp"
#include "itsr/probe.hpp"
#include "itsr/router.hpp"
#include "itsr/simworld.hpp"

namespace itsr {

struct SplitCounts {
  int train = 2000;
  int val = 250;
  int calibration = 250;
  int test = 250;

  int total() const { return train + val + calibration + test; }

  void validate() const {
    if (train < 1 || val < 1 || calibration < 1 || test < 1) {
      throw ConfigError("splits: every split count must be >= 1");
    }
  }
};

struct StrategySetConfig {
  std::vector<int> sampling_n = {1, 2, 4, 8, 16};
  std::vector<int> beam_n = {2, 4, 8, 16};
  int beam_width = 4;
  int beam_depth = 40;
};

struct RunConfig {
  WorldConfig world;
  SplitCounts splits;
  TrainConfig train;
  StrategySetConfig strategies;
  int repeats = 8;        // trace-generation repeats per (query, strategy)
  int eval_repeats = 8;   // evaluation-stream repeats
  std::vector<double> lambda_t_grid = {0.0, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3};
  std::vector<double> lambda_l_grid = {0.0, 1e-3, 1e-2, 1e-1};
  bool beam_only = false;
  std::string output_dir = "out";

  StrategySet strategy_set() const {
    if (beam_only) return default_beam_only_set();
    StrategySet set;
    for (const Method method :
         {Method::MajorityVote, Method::BestOfNNaive, Method::BestOfNWeighted}) {
      for (const int n : strategies.sampling_n) {
        set.strategies.push_back(Strategy::sampling(method, n));
      }
    }
    for (const int n : strategies.beam_n) {
      set.strategies.push_back(
          Strategy::beam_search(n, strategies.beam_width, strategies.beam_depth));
    }
    return set;
  }

  void validate() const {
    world.validate();
    splits.validate();
    train.validate();
    if (repeats < 1) throw ConfigError("harness.repeats must be >= 1");
    if (eval_repeats < 1) throw ConfigError("harness.eval_repeats must be >= 1");
    if (lambda_t_grid.empty()) throw ConfigError("sweep.lambda_t_grid must be nonempty");
    if (lambda_l_grid.empty()) throw ConfigError("sweep.lambda_l_grid must be nonempty");
    for (const double v : lambda_t_grid) {
      if (!(v >= 0.0)) throw ConfigError("sweep.lambda_t_grid values must be >= 0");
    }
    for (const double v : lambda_l_grid) {
      if (!(v >= 0.0)) throw ConfigError("sweep.lambda_l_grid values must be >= 0");
    }
    if (output_dir.empty()) throw ConfigError("output_dir must be nonempty");
    strategy_set().validate();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_double(std::string_view value, const std::string& key, int line) {
  const std::string buf(value);
  try {
    std::size_t consumed = 0;
    const double parsed = std::stod(buf, &consumed);
    if (consumed != buf.size()) throw std::invalid_argument("trailing characters");
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                      "' expects a number, got '" + buf + "'");
  }
}

inline std::int64_t parse_int(std::string_view value, const std::string& key, int line) {
  std::int64_t parsed = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                      "' expects an integer, got '" + std::string(value) + "'");
  }
  return parsed;
}

inline bool parse_bool(std::string_view value, const std::string& key, int line) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                    "' expects true/false, got '" + std::string(value) + "'");
}

template <typename T, typename ParseOne>
inline std::vector<T> parse_list(std::string_view value, const std::string& key,
                                 int line, ParseOne&& one) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    std::size_t comma = value.find(',', start);
    if (comma == std::string_view::npos) comma = value.size();
    const auto item = trim(value.substr(start, comma - start));
    if (item.empty()) {
      throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                        "' has an empty list element");
    }
    out.push_back(one(item, key, line));
    start = comma + 1;
    if (comma == value.size()) break;
  }
  if (out.empty()) {
    throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                      "' expects a nonempty list");
  }
  return out;
}

inline void apply_key(RunConfig& cfg, const std::string& key, std::string_view value,
                      int line) {
  const auto num = [&] { return parse_double(value, key, line); };
  const auto integer = [&] { return parse_int(value, key, line); };
  const auto int_list = [&] {
    return parse_list<int>(value, key, line,
                           [](std::string_view item, const std::string& k, int ln) {
                             return static_cast<int>(parse_int(item, k, ln));
                           });
  };
  const auto double_list = [&] {
    return parse_list<double>(value, key, line,
                              [](std::string_view item, const std::string& k, int ln) {
                                return parse_double(item, k, ln);
                              });
  };

  if (key == "world.seed") {
    cfg.world.seed = static_cast<std::uint64_t>(integer());
  } else if (key == "world.answer_space") {
    cfg.world.answer_space = static_cast<int>(integer());
  } else if (key == "world.embedding_dim") {
    cfg.world.embedding_dim = static_cast<int>(integer());
  } else if (key == "world.difficulty_alpha") {
    cfg.world.difficulty_alpha = num();
  } else if (key == "world.difficulty_beta") {
    cfg.world.difficulty_beta = num();
  } else if (key == "world.base_skill") {
    cfg.world.base_skill = num();
  } else if (key == "world.skill_slope") {
    cfg.world.skill_slope = num();
  } else if (key == "world.step_gain") {
    cfg.world.step_gain = num();
  } else if (key == "world.reward_noise") {
    cfg.world.reward_noise = num();
  } else if (key == "world.prm_noise") {
    cfg.world.prm_noise = num();
  } else if (key == "world.tokens_per_candidate_mean") {
    cfg.world.tokens_per_candidate_mean = num();
  } else if (key == "world.tokens_per_step_mean") {
    cfg.world.tokens_per_step_mean = num();
  } else if (key == "latency.setup_s") {
    cfg.world.latency.setup_s = num();
  } else if (key == "latency.per_token_s") {
    cfg.world.latency.per_token_s = num();
  } else if (key == "latency.parallel_n_s") {
    cfg.world.latency.parallel_n_s = num();
  } else if (key == "latency.score_call_s") {
    cfg.world.latency.score_call_s = num();
  } else if (key == "latency.score_per_candidate_s") {
    cfg.world.latency.score_per_candidate_s = num();
  } else if (key == "splits.train") {
    cfg.splits.train = static_cast<int>(integer());
  } else if (key == "splits.val") {
    cfg.splits.val = static_cast<int>(integer());
  } else if (key == "splits.calibration") {
    cfg.splits.calibration = static_cast<int>(integer());
  } else if (key == "splits.test") {
    cfg.splits.test = static_cast<int>(integer());
  } else if (key == "train.learning_rate") {
    cfg.train.learning_rate = num();
  } else if (key == "train.max_epochs") {
    cfg.train.max_epochs = static_cast<int>(integer());
  } else if (key == "train.patience") {
    cfg.train.patience = static_cast<int>(integer());
  } else if (key == "train.batch_size") {
    cfg.train.batch_size = static_cast<int>(integer());
  } else if (key == "train.seed") {
    cfg.train.seed = static_cast<std::uint64_t>(integer());
  } else if (key == "strategies.sampling_n") {
    cfg.strategies.sampling_n = int_list();
  } else if (key == "strategies.beam_n") {
    cfg.strategies.beam_n = int_list();
  } else if (key == "strategies.beam_width") {
    cfg.strategies.beam_width = static_cast<int>(integer());
  } else if (key == "strategies.beam_depth") {
    cfg.strategies.beam_depth = static_cast<int>(integer());
  } else if (key == "harness.repeats") {
    cfg.repeats = static_cast<int>(integer());
  } else if (key == "harness.eval_repeats") {
    cfg.eval_repeats = static_cast<int>(integer());
  } else if (key == "sweep.lambda_t_grid") {
    cfg.lambda_t_grid = double_list();
  } else if (key == "sweep.lambda_l_grid") {
    cfg.lambda_l_grid = double_list();
  } else if (key == "beam_only") {
    cfg.beam_only = parse_bool(value, key, line);
  } else if (key == "output_dir") {
    cfg.output_dir = std::string(value);
  } else {
    throw ConfigError("config line " + std::to_string(line) + ": unknown key '" +
                      key + "'");
  }
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream stream(text);
  std::string raw;
  int line = 0;
  while (std::getline(stream, raw)) {
    ++line;
    std::string_view sv(raw);
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) {
      sv = sv.substr(0, hash);
    }
    sv = detail::trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line) +
                        ": expected 'key = value', got '" + std::string(sv) + "'");
    }
    const std::string key(detail::trim(sv.substr(0, eq)));
    const auto value = detail::trim(sv.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line) + ": empty key");
    }
    detail::apply_key(cfg, key, value, line);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace detail {

inline void hash_text(std::ostringstream& out, const RunConfig& c) {
  const auto put = [&out](const char* key, auto value) {
    out << key << '=';
    if constexpr (std::is_floating_point_v<decltype(value)>) {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof(buf), value);
      out.write(buf, res.ptr - buf);
    } else {
      out << value;
    }
    out << '\n';
  };
  put("world.seed", c.world.seed);
  put("world.answer_space", c.world.answer_space);
  put("world.embedding_dim", c.world.embedding_dim);
  put("world.difficulty_alpha", c.world.difficulty_alpha);
  put("world.difficulty_beta", c.world.difficulty_beta);
  put("world.base_skill", c.world.base_skill);
  put("world.skill_slope", c.world.skill_slope);
  put("world.step_gain", c.world.step_gain);
  put("world.reward_noise", c.world.reward_noise);
  put("world.prm_noise", c.world.prm_noise);
  put("world.tokens_per_candidate_mean", c.world.tokens_per_candidate_mean);
  put("world.tokens_per_step_mean", c.world.tokens_per_step_mean);
  put("latency.setup_s", c.world.latency.setup_s);
  put("latency.per_token_s", c.world.latency.per_token_s);
  put("latency.parallel_n_s", c.world.latency.parallel_n_s);
  put("latency.score_call_s", c.world.latency.score_call_s);
  put("latency.score_per_candidate_s", c.world.latency.score_per_candidate_s);
  put("splits.train", c.splits.train);
  put("splits.val", c.splits.val);
  put("splits.calibration", c.splits.calibration);
  put("splits.test", c.splits.test);
  put("train.learning_rate", c.train.learning_rate);
  put("train.max_epochs", c.train.max_epochs);
  put("train.patience", c.train.patience);
  put("train.batch_size", c.train.batch_size);
  put("train.seed", c.train.seed);
  for (const int n : c.strategies.sampling_n) put("strategies.sampling_n[]", n);
  for (const int n : c.strategies.beam_n) put("strategies.beam_n[]", n);
  put("strategies.beam_width", c.strategies.beam_width);
  put("strategies.beam_depth", c.strategies.beam_depth);
  put("harness.repeats", c.repeats);
  put("harness.eval_repeats", c.eval_repeats);
  for (const double v : c.lambda_t_grid) put("sweep.lambda_t_grid[]", v);
  for (const double v : c.lambda_l_grid) put("sweep.lambda_l_grid[]", v);
  put("beam_only", c.beam_only ? 1 : 0);
  put("output_dir", c.output_dir);
}

}  // namespace detail

// FNV-1a over the canonical key dump; printed by every CLI command so runs
// can be matched to their effective configuration.
inline std::string config_hash(const RunConfig& cfg) {
  std::ostringstream text;
  detail::hash_text(text, cfg);
  const std::string dump = text.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, h, 16);
  std::string hex(buf, res.ptr);
  return std::string(16 - hex.size(), '0') + hex;
}

}  // namespace itsr
