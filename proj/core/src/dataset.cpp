// SPDX-License-Identifier: Apache-2.0
#include "atf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "atf/config.hpp"
#include "atf/flow.hpp"
#include "atf/image_io.hpp"

namespace fs = std::filesystem;

namespace atf {

namespace {

constexpr Channel kChannels[] = {Channel::kRgb, Channel::kDepth, Channel::kGt,
                                 Channel::kFlow};

const char *channel_dir(Channel ch) {
  switch (ch) {
  case Channel::kRgb:
    return "rgb";
  case Channel::kDepth:
    return "depth";
  case Channel::kGt:
    return "gt";
  case Channel::kFlow:
    return "flow";
  }
  return "?";
}

const char *channel_ext(Channel ch) { return ch == Channel::kFlow ? ".flo" : ".png"; }

std::string frame_name(std::size_t index, Channel ch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu%s", index, channel_ext(ch));
  return buf;
}

// "00012.png" -> 12 for the channel's extension, nullopt otherwise.
std::optional<std::size_t> parse_frame_name(const std::string &name, Channel ch) {
  const std::string ext = channel_ext(ch);
  if (name.size() != 5 + ext.size() || name.substr(5) != ext)
    return std::nullopt;
  std::size_t v = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    if (name[i] < '0' || name[i] > '9')
      return std::nullopt;
    v = v * 10 + static_cast<std::size_t>(name[i] - '0');
  }
  return v;
}

ImageSize raster_size(const fs::path &path, Channel ch) {
  if (ch != Channel::kFlow)
    return read_png_size(path);
  const Tensor f = read_flow_file(path);
  return {f.dim(1), f.dim(2)};
}

void check_video(const DatasetLayout &layout, const std::string &video, bool deep,
                 std::vector<LayoutIssue> &issues, std::size_t &frames) {
  const fs::path dir = layout.video_dir(video);
  std::map<Channel, std::set<std::size_t>> present;
  std::set<std::size_t> all;
  for (Channel ch : kChannels) {
    const fs::path sub = dir / channel_dir(ch);
    auto &set = present[ch];
    if (!fs::is_directory(sub))
      continue;
    for (const auto &entry : fs::directory_iterator(sub)) {
      const std::string name = entry.path().filename().string();
      if (const auto idx = parse_frame_name(name, ch); idx && entry.is_regular_file()) {
        set.insert(*idx);
        all.insert(*idx);
      } else {
        issues.push_back({ErrorKind::kIo, entry.path(), "unexpected entry"});
      }
    }
  }
  frames = 0;
  if (all.empty()) {
    issues.push_back({ErrorKind::kMissingFile, dir, "video has no frames"});
    return;
  }
  const std::size_t last = *all.rbegin();
  for (std::size_t i = 0; i <= last; ++i) {
    if (!all.count(i)) {
      issues.push_back({ErrorKind::kMissingFile, dir,
                        "frame indices are not contiguous: gap at " + std::to_string(i)});
      continue;
    }
    for (Channel ch : kChannels)
      if (!present[ch].count(i))
        issues.push_back({ErrorKind::kMissingFile, layout.frame_path(video, ch, i),
                          "missing companion file"});
  }
  frames = last + 1;
  if (!deep)
    return;
  for (std::size_t i = 0; i <= last; ++i) {
    std::optional<ImageSize> ref;
    for (Channel ch : kChannels) {
      if (!present[ch].count(i))
        continue;
      const fs::path p = layout.frame_path(video, ch, i);
      try {
        const ImageSize sz = raster_size(p, ch);
        if (!ref)
          ref = sz;
        else if (!(sz == *ref))
          issues.push_back({ErrorKind::kShapeMismatch, p,
                            std::to_string(sz.height) + " x " + std::to_string(sz.width) +
                                " differs from " + std::to_string(ref->height) + " x " +
                                std::to_string(ref->width)});
        if (ch == Channel::kGt)
          read_mask_png(p);
        else if (ch == Channel::kRgb)
          read_rgb_png(p);
        else if (ch == Channel::kDepth)
          read_gray_png(p);
      } catch (const Error &e) {
        issues.push_back({e.kind(), p, e.what()});
      }
    }
  }
}

} // namespace

std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split parse_split(std::string_view s) {
  if (s == "train")
    return Split::kTrain;
  if (s == "test")
    return Split::kTest;
  fail(ErrorKind::kConfig, "split must be train or test, got '" + std::string(s) + "'");
}

fs::path DatasetLayout::video_dir(const std::string &video) const {
  return root / std::string(to_string(split)) / video;
}

fs::path DatasetLayout::frame_path(const std::string &video, Channel ch,
                                   std::size_t index) const {
  return video_dir(video) / channel_dir(ch) / frame_name(index, ch);
}

std::size_t DatasetLayout::frame_count() const {
  std::size_t n = 0;
  for (const auto &v : videos)
    n += v.frames;
  return n;
}

const VideoEntry &DatasetLayout::video(const std::string &id) const {
  for (const auto &v : videos)
    if (v.id == id)
      return v;
  fail(ErrorKind::kMissingFile, "no video '" + id + "' in " + video_dir(id).string());
}

ValidationReport validate_layout(const fs::path &root, bool deep) {
  ValidationReport report;
  report.train.root = report.test.root = root;
  report.train.split = Split::kTrain;
  report.test.split = Split::kTest;
  if (!fs::is_directory(root)) {
    report.issues.push_back({ErrorKind::kMissingFile, root, "dataset root does not exist"});
    return report;
  }
  bool any_split = false;
  for (DatasetLayout *layout : {&report.train, &report.test}) {
    const fs::path split_dir = root / std::string(to_string(layout->split));
    if (!fs::is_directory(split_dir))
      continue;
    any_split = true;
    std::vector<std::string> ids;
    for (const auto &entry : fs::directory_iterator(split_dir)) {
      if (entry.is_directory())
        ids.push_back(entry.path().filename().string());
      else
        report.issues.push_back({ErrorKind::kIo, entry.path(), "unexpected entry"});
    }
    std::sort(ids.begin(), ids.end());
    for (const auto &id : ids) {
      std::size_t frames = 0;
      check_video(*layout, id, deep, report.issues, frames);
      if (frames)
        layout->videos.push_back({id, frames});
    }
  }
  if (!any_split)
    report.issues.push_back({ErrorKind::kMissingFile, root, "neither train/ nor test/ exists"});
  return report;
}

DatasetLayout open_layout(const fs::path &root, Split split, bool deep) {
  ValidationReport report = validate_layout(root, deep);
  const fs::path split_dir = root / std::string(to_string(split));
  std::vector<LayoutIssue> relevant;
  for (const auto &issue : report.issues) {
    const std::string p = issue.path.string();
    if (p.rfind(split_dir.string(), 0) == 0 || issue.path == root)
      relevant.push_back(issue);
  }
  DatasetLayout layout = split == Split::kTrain ? report.train : report.test;
  if (relevant.empty() && layout.videos.empty())
    relevant.push_back({ErrorKind::kMissingFile, split_dir, "split has no videos"});
  if (!relevant.empty()) {
    std::string msg = split_dir.string() + " is not a valid split (" +
                      std::to_string(relevant.size()) + " issues):";
    for (std::size_t i = 0; i < relevant.size() && i < 5; ++i)
      msg += "\n  " + relevant[i].path.string() + ": " + relevant[i].message;
    fail(relevant.front().kind, msg);
  }
  return layout;
}

FrameSample load_frame(const DatasetLayout &layout, const std::string &video,
                       std::size_t index) {
  for (Channel ch : kChannels) {
    const fs::path p = layout.frame_path(video, ch, index);
    if (!fs::exists(p))
      fail(ErrorKind::kMissingFile, "missing " + p.string());
  }
  FrameSample s;
  s.video_id = video;
  s.frame_index = index;
  s.rgb = read_rgb_png(layout.frame_path(video, Channel::kRgb, index));
  s.depth = read_gray_png(layout.frame_path(video, Channel::kDepth, index));
  s.gt = read_mask_png(layout.frame_path(video, Channel::kGt, index));
  s.flow = read_flow_file(layout.frame_path(video, Channel::kFlow, index));
  const std::size_t h = s.rgb.dim(1), w = s.rgb.dim(2);
  for (const Tensor *t : {&s.depth, &s.gt, &s.flow})
    if (t->dim(1) != h || t->dim(2) != w)
      fail(ErrorKind::kShapeMismatch,
           layout.video_dir(video).string() + " frame " + std::to_string(index) +
               ": rasters disagree in size (" + shape_str(s.rgb.shape()) + " vs " +
               shape_str(t->shape()) + ")");
  if (index == 0)
    s.flow.fill(0);
  return s;
}

std::vector<FrameSample> load_sequence(const DatasetLayout &layout,
                                       const std::string &video) {
  const VideoEntry &entry = layout.video(video);
  std::vector<FrameSample> out;
  out.reserve(entry.frames);
  for (std::size_t i = 0; i < entry.frames; ++i)
    out.push_back(load_frame(layout, video, i));
  return out;
}

DatasetStats dataset_stats(const std::vector<DatasetLayout> &layouts) {
  DatasetStats st;
  st.size_ratio_histogram.assign(DatasetStats::kBins, 0);
  st.size_ratio_min = 1;
  real ratio_sum = 0;
  for (const auto &layout : layouts) {
    (layout.split == Split::kTrain ? st.train_videos : st.test_videos) += layout.videos.size();
    (layout.split == Split::kTrain ? st.train_frames : st.test_frames) += layout.frame_count();
    st.videos += layout.videos.size();
    for (const auto &v : layout.videos)
      for (std::size_t i = 0; i < v.frames; ++i) {
        Tensor gt = read_mask_png(layout.frame_path(v.id, Channel::kGt, i));
        real fg = 0;
        for (real x : gt.data())
          fg += x;
        const real ratio = fg / static_cast<real>(gt.size());
        ratio_sum += ratio;
        st.size_ratio_min = std::min(st.size_ratio_min, ratio);
        st.size_ratio_max = std::max(st.size_ratio_max, ratio);
        const auto bin = std::min<std::size_t>(
            static_cast<std::size_t>(ratio * DatasetStats::kBins), DatasetStats::kBins - 1);
        st.size_ratio_histogram[bin] += 1;
        if (st.center_bias.empty())
          st.center_bias = Tensor(gt.shape());
        else if (gt.shape() != st.center_bias.shape())
          gt = resize_chw(gt, st.center_bias.dim(1), st.center_bias.dim(2));
        for (std::size_t k = 0; k < gt.size(); ++k)
          st.center_bias[k] += gt[k];
        ++st.frames;
      }
  }
  if (st.frames == 0) {
    st.size_ratio_min = 0;
    return st;
  }
  const real n = static_cast<real>(st.frames);
  st.size_ratio_mean = ratio_sum / n;
  for (auto &b : st.size_ratio_histogram)
    b /= n;
  for (auto &v : st.center_bias.data())
    v /= n;
  return st;
}

std::string format_stats(const DatasetStats &st) {
  std::ostringstream os;
  os << "frames = " << st.frames << '\n'
     << "videos = " << st.videos << '\n'
     << "train.videos = " << st.train_videos << '\n'
     << "train.frames = " << st.train_frames << '\n'
     << "test.videos = " << st.test_videos << '\n'
     << "test.frames = " << st.test_frames << '\n';
  if (st.videos)
    os << "split.train_fraction = "
       << format_real(static_cast<real>(st.train_videos) / static_cast<real>(st.videos))
       << '\n';
  os << "size_ratio.mean = " << format_real(st.size_ratio_mean) << '\n'
     << "size_ratio.min = " << format_real(st.size_ratio_min) << '\n'
     << "size_ratio.max = " << format_real(st.size_ratio_max) << '\n'
     << "size_ratio.histogram = ";
  for (std::size_t i = 0; i < st.size_ratio_histogram.size(); ++i)
    os << (i ? "," : "") << format_real(st.size_ratio_histogram[i]);
  os << '\n';
  if (!st.center_bias.empty()) {
    const auto it = std::max_element(st.center_bias.data().begin(), st.center_bias.data().end());
    const auto idx = static_cast<std::size_t>(it - st.center_bias.data().begin());
    const std::size_t w = st.center_bias.dim(2);
    os << "center_bias.height = " << st.center_bias.dim(1) << '\n'
       << "center_bias.width = " << w << '\n'
       << "center_bias.max = " << format_real(*it) << '\n'
       << "center_bias.argmax_row = " << idx / w << '\n'
       << "center_bias.argmax_col = " << idx % w << '\n';
  }
  return os.str();
}

} // namespace atf
