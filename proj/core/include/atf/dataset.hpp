// SPDX-License-Identifier: Apache-2.0
/**
 * @file   dataset.hpp
 * @brief  On-disk RGB-D video saliency datasets.
 *
 * Layout:
 *   root/{train,test}/<video>/rgb/00000.png     8-bit RGB
 *                            /depth/00000.png   16-bit (or 8-bit) gray
 *                            /gt/00000.png      binary mask, 0 or max code
 *                            /flow/00000.flo    raw flow, see flow.hpp
 * Frame indices are contiguous from 0. Frame 0 has no predecessor, so its
 * flow is replaced by zeros on load.
 */
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "atf/error.hpp"
#include "atf/tensor.hpp"

namespace atf {

struct FrameSample {
  Tensor rgb;   ///< 3 x H x W in [0, 1]
  Tensor depth; ///< 1 x H x W in [0, 1]
  Tensor flow;  ///< 2 x H x W, pixels per frame
  Tensor gt;    ///< 1 x H x W in {0, 1}
  std::size_t frame_index = 0;
  std::string video_id;
};

enum class Split { kTrain, kTest };
std::string_view to_string(Split s);
/// "train" or "test"; ConfigError otherwise.
Split parse_split(std::string_view s);

enum class Channel { kRgb, kDepth, kGt, kFlow };

struct VideoEntry {
  std::string id;
  std::size_t frames = 0;
};

struct DatasetLayout {
  std::filesystem::path root;
  Split split = Split::kTrain;
  std::vector<VideoEntry> videos; ///< sorted by id

  std::filesystem::path video_dir(const std::string &video) const;
  std::filesystem::path frame_path(const std::string &video, Channel ch,
                                   std::size_t index) const;
  std::size_t frame_count() const;
  const VideoEntry &video(const std::string &id) const;
};

struct LayoutIssue {
  ErrorKind kind = ErrorKind::kMissingFile;
  std::filesystem::path path;
  std::string message;
};

struct ValidationReport {
  std::vector<LayoutIssue> issues;
  DatasetLayout train, test;

  bool ok() const { return issues.empty(); }
};

/// Walks both splits and reports every violation found. With `deep`, every
/// raster is decoded to check sizes and mask values.
ValidationReport validate_layout(const std::filesystem::path &root, bool deep = true);

/// Layout of one split; throws (MissingFile, ShapeMismatch, InvalidMask, ...)
/// with the first issues listed when the split is not valid.
DatasetLayout open_layout(const std::filesystem::path &root, Split split,
                          bool deep = false);

/// MissingFile names the absent path; ShapeMismatch when rasters disagree.
FrameSample load_frame(const DatasetLayout &layout, const std::string &video,
                       std::size_t index);
std::vector<FrameSample> load_sequence(const DatasetLayout &layout,
                                       const std::string &video);

struct DatasetStats {
  static constexpr std::size_t kBins = 20;

  std::size_t frames = 0, videos = 0;
  std::size_t train_videos = 0, test_videos = 0;
  std::size_t train_frames = 0, test_frames = 0;
  std::vector<real> size_ratio_histogram; ///< kBins bins over [0, 1], sums to 1
  real size_ratio_mean = 0, size_ratio_min = 0, size_ratio_max = 0;
  Tensor center_bias; ///< 1 x H x W mean mask at the first frame's size
};

/// Reads every ground-truth mask of the given splits.
DatasetStats dataset_stats(const std::vector<DatasetLayout> &layouts);

/// `key = value` lines; the center-bias map is summarized, not dumped.
std::string format_stats(const DatasetStats &stats);

} // namespace atf
