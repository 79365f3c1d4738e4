// itsr: inference-time strategy routing pipeline.
//
// Subcommands hand off through files so every stage can be inspected and
// re-run: simulate -> traces.jsonl, train -> probe.json + costs.json,
// route -> decisions.jsonl, sweep -> sweep.csv (+ optional comparisons).
//
// Exit codes: 0 success, 1 user/config error, 2 environment/I-O error.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itsr/config.hpp"
#include "itsr/harness.hpp"
#include "itsr/io.hpp"
#include "itsr/metrics.hpp"

namespace {

struct CliState {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::vector<double>> grid_lambda_t;
  std::optional<std::vector<double>> grid_lambda_l;
  double lambda_t = 0.0;
  double lambda_l = 0.0;
  bool beam_only = false;
  bool compare_cost_models = false;
  bool oracle = false;
  std::optional<int> route_count;
};

itsr::RunConfig effective_config(const CliState& state) {
  itsr::RunConfig cfg;
  if (!state.config_path.empty()) cfg = itsr::load_config(state.config_path);
  if (state.seed) cfg.world.seed = *state.seed;
  if (state.out_dir) cfg.output_dir = *state.out_dir;
  if (state.grid_lambda_t) cfg.lambda_t_grid = *state.grid_lambda_t;
  if (state.grid_lambda_l) cfg.lambda_l_grid = *state.grid_lambda_l;
  if (state.beam_only) cfg.beam_only = true;
  cfg.validate();
  std::cout << "config hash: " << itsr::config_hash(cfg) << "\n";
  return cfg;
}

// Query ids are assigned contiguously: train, then val, then calibration,
// then test. Trace splitting keys off these ranges.
struct SplitQueries {
  std::vector<itsr::QueryInstance> train;
  std::vector<itsr::QueryInstance> val;
  std::vector<itsr::QueryInstance> calibration;
  std::vector<itsr::QueryInstance> test;
};

SplitQueries sample_splits(const itsr::RunConfig& cfg) {
  SplitQueries q;
  itsr::QueryId next = 0;
  q.train = itsr::sample_queries(cfg.world, cfg.splits.train, next);
  next += static_cast<itsr::QueryId>(cfg.splits.train);
  q.val = itsr::sample_queries(cfg.world, cfg.splits.val, next);
  next += static_cast<itsr::QueryId>(cfg.splits.val);
  q.calibration = itsr::sample_queries(cfg.world, cfg.splits.calibration, next);
  next += static_cast<itsr::QueryId>(cfg.splits.calibration);
  q.test = itsr::sample_queries(cfg.world, cfg.splits.test, next);
  return q;
}

std::vector<itsr::QueryInstance> sample_test_split(const itsr::RunConfig& cfg) {
  const auto first = static_cast<itsr::QueryId>(cfg.splits.train + cfg.splits.val +
                                                cfg.splits.calibration);
  return itsr::sample_queries(cfg.world, cfg.splits.test, first);
}

int cmd_simulate(const CliState& state) {
  const itsr::RunConfig cfg = effective_config(state);
  const itsr::StrategySet set = cfg.strategy_set();
  const SplitQueries queries = sample_splits(cfg);

  std::vector<itsr::QueryInstance> traced;
  traced.reserve(queries.train.size() + queries.val.size() +
                 queries.calibration.size());
  traced.insert(traced.end(), queries.train.begin(), queries.train.end());
  traced.insert(traced.end(), queries.val.begin(), queries.val.end());
  traced.insert(traced.end(), queries.calibration.begin(), queries.calibration.end());

  const auto records = itsr::generate_traces(cfg.world, traced, set, cfg.repeats);

  const std::filesystem::path out(cfg.output_dir);
  itsr::write_traces(out / "traces.jsonl", records);

  itsr::json manifest;
  manifest["config_hash"] = itsr::config_hash(cfg);
  manifest["seed"] = cfg.world.seed;
  manifest["queries"] = traced.size();
  manifest["strategies"] = set.strategies.size();
  manifest["records"] = records.size();
  manifest["repeats"] = cfg.repeats;
  manifest["splits"] = {{"train", cfg.splits.train},
                        {"val", cfg.splits.val},
                        {"calibration", cfg.splits.calibration},
                        {"test", cfg.splits.test}};
  itsr::write_json_file(out / "manifest.json", manifest);

  std::cout << "wrote " << records.size() << " trace records to "
            << (out / "traces.jsonl").string() << "\n";
  return 0;
}

int cmd_train(const CliState& state) {
  const itsr::RunConfig cfg = effective_config(state);
  const std::filesystem::path out(cfg.output_dir);
  const auto records = itsr::read_traces(out / "traces.jsonl");

  const auto train_end = static_cast<itsr::QueryId>(cfg.splits.train);
  const auto val_end = train_end + static_cast<itsr::QueryId>(cfg.splits.val);
  const auto calib_end =
      val_end + static_cast<itsr::QueryId>(cfg.splits.calibration);

  std::vector<itsr::TraceRecord> train_recs, val_recs, calib_recs;
  for (const auto& rec : records) {
    if (rec.query_id < train_end) {
      train_recs.push_back(rec);
    } else if (rec.query_id < val_end) {
      val_recs.push_back(rec);
    } else if (rec.query_id < calib_end) {
      calib_recs.push_back(rec);
    } else {
      throw itsr::ConfigError("traces.jsonl contains query_id " +
                              std::to_string(rec.query_id) +
                              " outside the configured splits");
    }
  }
  if (train_recs.empty() || val_recs.empty() || calib_recs.empty()) {
    throw itsr::ConfigError("traces.jsonl does not cover all three training splits");
  }

  itsr::TrainConfig train_cfg = cfg.train;
  train_cfg.seed = itsr::derive_seed(cfg.world.seed, cfg.train.seed);
  itsr::ProbeModel probe = itsr::train_probe(train_recs, val_recs, train_cfg,
                                             cfg.world.embedding_dim);
  const double val_loss = itsr::batch_loss_records(probe, val_recs);

  std::vector<double> calib_logits, calib_labels;
  calib_logits.reserve(calib_recs.size());
  calib_labels.reserve(calib_recs.size());
  for (const auto& rec : calib_recs) {
    calib_logits.push_back(itsr::forward(probe, rec.features));
    calib_labels.push_back(rec.soft_label);
  }
  std::vector<double> before;
  before.reserve(calib_logits.size());
  for (const double logit : calib_logits) before.push_back(itsr::sigmoid(logit));

  const itsr::CalibrationResult calibrated = itsr::calibrate(probe, calib_recs);
  std::vector<double> after;
  after.reserve(calib_logits.size());
  for (const double logit : calib_logits) {
    after.push_back(itsr::sigmoid(calibrated.model.platt_a * logit +
                                  calibrated.model.platt_b));
  }

  const itsr::CostTable costs = itsr::fit_costs(train_recs);

  itsr::write_probe(out / "probe.json", calibrated.model);
  itsr::write_costs(out / "costs.json", costs);

  itsr::json metrics;
  metrics["config_hash"] = itsr::config_hash(cfg);
  metrics["val_loss"] = val_loss;
  metrics["auc"] = itsr::auc(after, calib_labels);
  metrics["ece_before"] = itsr::expected_calibration_error(before, calib_labels);
  metrics["ece_after"] = itsr::expected_calibration_error(after, calib_labels);
  metrics["max_reliability_gap"] = itsr::max_reliability_gap(after, calib_labels);
  metrics["degenerate_calibration"] = calibrated.degenerate;
  itsr::write_json_file(out / "metrics.json", metrics);

  std::cout << "trained probe on " << train_recs.size() << " records, val loss "
            << val_loss << ", wrote " << (out / "probe.json").string() << "\n";
  return 0;
}

int cmd_route(const CliState& state) {
  const itsr::RunConfig cfg = effective_config(state);
  const std::filesystem::path out(cfg.output_dir);
  const itsr::StrategySet set = cfg.strategy_set();
  const itsr::PenaltyWeights weights{state.lambda_t, state.lambda_l};

  const int count = state.route_count.value_or(cfg.splits.test);
  if (count < 0) throw itsr::ConfigError("--count must be >= 0");

  std::vector<itsr::RoutingDecision> decisions;
  if (count > 0) {
    const auto first = static_cast<itsr::QueryId>(cfg.splits.train + cfg.splits.val +
                                                  cfg.splits.calibration);
    const auto queries = itsr::sample_queries(cfg.world, count, first);
    if (state.oracle) {
      const auto outcomes =
          itsr::measure_true_outcomes(cfg.world, queries, set, cfg.eval_repeats);
      for (const auto& query : queries) {
        decisions.push_back(itsr::oracle_route(query.query_id, set,
                                               outcomes.row(query.query_id), weights));
      }
    } else {
      const itsr::ProbeModel probe = itsr::read_probe(out / "probe.json");
      const itsr::CostTable costs = itsr::read_costs(out / "costs.json");
      for (const auto& query : queries) {
        decisions.push_back(itsr::route(query, set, probe, costs, weights));
      }
    }
  }
  itsr::write_decisions(out / "decisions.jsonl", decisions);
  std::cout << "wrote " << decisions.size() << " decisions to "
            << (out / "decisions.jsonl").string() << "\n";
  return 0;
}

int cmd_sweep(const CliState& state) {
  const itsr::RunConfig cfg = effective_config(state);
  const std::filesystem::path out(cfg.output_dir);
  const itsr::StrategySet set = cfg.strategy_set();
  if (cfg.beam_only) itsr::validate_beam_only(set);

  const itsr::ProbeModel probe = itsr::read_probe(out / "probe.json");
  const itsr::CostTable costs = itsr::read_costs(out / "costs.json");
  const auto queries = sample_test_split(cfg);
  const auto outcomes =
      itsr::measure_true_outcomes(cfg.world, queries, set, cfg.eval_repeats);

  const auto points = itsr::sweep(probe, costs, set, cfg.lambda_t_grid,
                                  cfg.lambda_l_grid, queries, outcomes);
  itsr::write_sweep_csv(out / "sweep.csv", points);

  const auto baselines =
      itsr::static_baselines(set, queries, outcomes, itsr::PenaltyWeights{});
  itsr::write_baselines_csv(out / "static_baselines.csv", baselines);

  if (state.compare_cost_models) {
    const auto compare = itsr::compare_cost_models(
        probe, costs, set, cfg.lambda_t_grid, cfg.lambda_l_grid, queries, outcomes);
    itsr::write_compare_csv(out / "compare_cost_models.csv", compare);
  }

  std::cout << "wrote " << points.size() << " sweep points to "
            << (out / "sweep.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inference-time strategy routing pipeline"};
  app.require_subcommand(1);

  CliState state;
  app.add_option("--config", state.config_path, "config file (key = value lines)");
  app.add_option("--seed", state.seed, "world seed override");
  app.add_option("--out", state.out_dir, "output directory override");
  app.add_option("--grid-lambda-t", state.grid_lambda_t,
                 "comma-separated lambda_t grid override")
      ->delimiter(',');
  app.add_option("--grid-lambda-l", state.grid_lambda_l,
                 "comma-separated lambda_l grid override")
      ->delimiter(',');
  app.add_flag("--beam-only", state.beam_only, "restrict to the beam-only strategy set");

  auto* simulate = app.add_subcommand("simulate", "generate traces.jsonl");
  auto* train = app.add_subcommand("train", "train probe and cost model from traces");
  auto* route = app.add_subcommand("route", "route a simulated test batch");
  route->add_option("--lambda-t", state.lambda_t, "token penalty");
  route->add_option("--lambda-l", state.lambda_l, "latency penalty");
  route->add_option("--count", state.route_count, "number of test queries to route");
  route->add_flag("--oracle", state.oracle, "route on true outcomes instead of the probe");
  auto* sweep = app.add_subcommand("sweep", "emit sweep.csv over the lambda grids");
  sweep->add_flag("--compare-cost-models", state.compare_cost_models,
                  "also emit predicted-vs-true cost routing comparison");

  for (auto* sub : {simulate, train, route, sweep}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(state);
    if (train->parsed()) return cmd_train(state);
    if (route->parsed()) return cmd_route(state);
    return cmd_sweep(state);
  } catch (const itsr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
