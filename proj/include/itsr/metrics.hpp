#pragma once

// Probe-quality metrics. Soft labels are binarized at 0.5 for AUC;
// calibration metrics compare mean predicted probability against mean soft
// label inside equal-width probability bins.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace itsr {

// Rank-based (Mann-Whitney) AUC with midrank handling of prediction ties.
// Returns 0.5 when only one class is present.
inline double auc(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw std::invalid_argument("auc: empty or mismatched inputs");
  }
  const std::size_t n = predictions.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a] < predictions[b];
  });

  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && predictions[order[j + 1]] == predictions[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = midrank;
    i = j + 1;
  }

  double positives = 0.0;
  double rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] >= 0.5) {
      positives += 1.0;
      rank_sum += rank[k];
    }
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) return 0.5;
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

struct ReliabilityBin {
  double mean_prediction = 0.0;
  double mean_label = 0.0;
  std::size_t count = 0;
};

// Equal-width binning over [0, 1]; predictions of exactly 1.0 land in the
// last bin.
inline std::vector<ReliabilityBin> reliability_bins(std::span<const double> predictions,
                                                    std::span<const double> labels,
                                                    int num_bins = 15) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw std::invalid_argument("reliability_bins: empty or mismatched inputs");
  }
  if (num_bins < 1) throw std::invalid_argument("reliability_bins: num_bins must be >= 1");
  std::vector<ReliabilityBin> bins(static_cast<std::size_t>(num_bins));
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double p = predictions[k];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("reliability_bins: prediction outside [0, 1]");
    }
    auto idx = static_cast<std::size_t>(p * num_bins);
    if (idx >= bins.size()) idx = bins.size() - 1;
    bins[idx].mean_prediction += p;
    bins[idx].mean_label += labels[k];
    ++bins[idx].count;
  }
  for (auto& bin : bins) {
    if (bin.count > 0) {
      bin.mean_prediction /= static_cast<double>(bin.count);
      bin.mean_label /= static_cast<double>(bin.count);
    }
  }
  return bins;
}

// Expected calibration error: count-weighted mean |confidence - accuracy|.
inline double expected_calibration_error(std::span<const double> predictions,
                                         std::span<const double> labels,
                                         int num_bins = 15) {
  const auto bins = reliability_bins(predictions, labels, num_bins);
  double total = 0.0;
  for (const auto& bin : bins) {
    total += static_cast<double>(bin.count) *
             std::abs(bin.mean_prediction - bin.mean_label);
  }
  return total / static_cast<double>(predictions.size());
}

// Largest per-bin |confidence - accuracy| over the populated bins.
inline double max_reliability_gap(std::span<const double> predictions,
                                  std::span<const double> labels, int num_bins = 15) {
  const auto bins = reliability_bins(predictions, labels, num_bins);
  double worst = 0.0;
  for (const auto& bin : bins) {
    if (bin.count == 0) continue;
    worst = std::max(worst, std::abs(bin.mean_prediction - bin.mean_label));
  }
  return worst;
}

inline double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty input");
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

}  // namespace itsr
