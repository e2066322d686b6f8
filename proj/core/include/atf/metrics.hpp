// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.hpp
 * @brief  Saliency evaluation measures: MAE, F-measure, S-measure, E-measure.
 *
 * Inputs are H x W maps (leading unit dimensions are accepted). S lies in
 * [0, 1], G is binary. Threshold sweeps use t = k / 255, k = 0..255, and
 * binarize with S > t.
 */
#pragma once

#include <string>
#include <vector>

#include "atf/tensor.hpp"

namespace atf {

struct MetricConstants {
  real beta_squared = 0.3;
  real alpha = 0.5;
  std::size_t threshold_count = 256;
};

real mae(const Tensor &s, const Tensor &g);

struct FMeasure {
  real max = 0;
  std::vector<real> curve; ///< one value per threshold
};

/// Throws EmptyGroundTruth when G has no foreground.
FMeasure f_measure(const Tensor &s, const Tensor &g, const MetricConstants &c = {});

/// F-measure at the adaptive threshold min(2 mean(S), 1), binarizing S >= t.
real adaptive_f_measure(const Tensor &s, const Tensor &g,
                        const MetricConstants &c = {});

/// Structure measure; alpha weights the object term.
real s_measure(const Tensor &s, const Tensor &g, const MetricConstants &c = {});

struct EMeasure {
  real mean = 0;
  std::vector<real> curve;
};

EMeasure e_measure(const Tensor &s, const Tensor &g, const MetricConstants &c = {});

struct FrameScores {
  real mae = 0, max_f = 0, s_alpha = 0, e_phi = 0;
  bool f_defined = true; ///< false for all-background ground truth
  std::vector<real> f_curve, e_curve;
};

FrameScores score_frame(const Tensor &s, const Tensor &g,
                        const MetricConstants &c = {});

struct SummaryScores {
  std::string name;
  std::size_t frames = 0;
  std::size_t f_frames = 0; ///< frames contributing to max_f
  real mae = 0, max_f = 0, s_alpha = 0, e_phi = 0;
};

struct MetricsReport {
  MetricConstants constants;
  std::vector<SummaryScores> videos;
  SummaryScores overall;
  std::vector<real> f_curve, e_curve; ///< frame means
};

/// Frame-weighted aggregation per video and overall.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(MetricConstants c = {}) : constants_(c) {}
  void add(const std::string &video, const FrameScores &scores);
  MetricsReport finish() const;

 private:
  struct Sums {
    std::string name;
    std::size_t frames = 0, f_frames = 0;
    real mae = 0, max_f = 0, s_alpha = 0, e_phi = 0;
  };
  static SummaryScores summarize(const Sums &s);

  MetricConstants constants_;
  std::vector<Sums> videos_;
  Sums overall_{"overall"};
  std::vector<real> f_sum_, e_sum_;
  std::size_t f_curve_frames_ = 0;
};

/// Fixed-width table, one row per video then the overall row.
std::string format_report_table(const MetricsReport &report);
/// `key = value` lines: constants, overall.*, video.<name>.*, curves.
std::string format_report_keyvalues(const MetricsReport &report);

} // namespace atf
