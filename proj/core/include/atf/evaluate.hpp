// SPDX-License-Identifier: Apache-2.0
/**
 * @file   evaluate.hpp
 * @brief  Dataset-level scoring of saved predictions or a live model.
 */
#pragma once

#include <filesystem>

#include "atf/atfnet.hpp"
#include "atf/dataset.hpp"
#include "atf/metrics.hpp"

namespace atf {

/// Prediction file for a frame: pred_root/<split>/<video>/NNNNN.png.
std::filesystem::path prediction_path(const std::filesystem::path &pred_root,
                                      const DatasetLayout &layout,
                                      const std::string &video, std::size_t index);

/// Scores every frame at ground-truth resolution (predictions of another size
/// are resized bilinearly). MissingPrediction names the first absent file.
MetricsReport evaluate_predictions(const std::filesystem::path &pred_root,
                                   const DatasetLayout &layout,
                                   const MetricConstants &constants = {});

/// Scores the fused map of `model` on every frame of `layout`.
MetricsReport evaluate_model(const AtfNet &model, const DatasetLayout &layout,
                             std::size_t size = 0, const MetricConstants &constants = {});

} // namespace atf
