// SPDX-License-Identifier: Apache-2.0
#include "atf/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>
#include <vector>

#include "atf/error.hpp"
#include "atf/image_io.hpp"
#include "atf/trainer.hpp"

namespace fs = std::filesystem;

namespace atf {

fs::path prediction_path(const fs::path &pred_root, const DatasetLayout &layout,
                         const std::string &video, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "%05zu.png", index);
  return pred_root / std::string(to_string(layout.split)) / video / name;
}

MetricsReport evaluate_predictions(const fs::path &pred_root, const DatasetLayout &layout,
                                   const MetricConstants &constants) {
  for (const auto &v : layout.videos)
    for (std::size_t i = 0; i < v.frames; ++i) {
      const fs::path p = prediction_path(pred_root, layout, v.id, i);
      if (!fs::exists(p))
        fail(ErrorKind::kMissingPrediction, "no prediction for " + v.id + " frame " +
                                                std::to_string(i) + " (expected " +
                                                p.string() + ")");
    }
  struct Job {
    const std::string *video;
    std::size_t index;
    FrameScores scores;
  };
  std::vector<Job> jobs;
  for (const auto &v : layout.videos)
    for (std::size_t i = 0; i < v.frames; ++i)
      jobs.push_back({&v.id, i, {}});

  // Frames are scored concurrently and accumulated in order.
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto work = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      try {
        Job &job = jobs[j];
        const Tensor gt = read_mask_png(layout.frame_path(*job.video, Channel::kGt, job.index));
        Tensor pred = read_gray_png(prediction_path(pred_root, layout, *job.video, job.index));
        pred = resize_chw(pred, gt.dim(1), gt.dim(2));
        job.scores = score_frame(pred, gt, constants);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < std::min(workers, jobs.size()); ++w)
    pool.emplace_back(work);
  work();
  pool.clear();
  for (const auto &e : errors)
    if (e)
      std::rethrow_exception(e);

  MetricsAccumulator acc(constants);
  for (const auto &job : jobs)
    acc.add(*job.video, job.scores);
  return acc.finish();
}

MetricsReport evaluate_model(const AtfNet &model, const DatasetLayout &layout,
                             std::size_t size, const MetricConstants &constants) {
  MetricsAccumulator acc(constants);
  for (const auto &v : layout.videos)
    for (std::size_t i = 0; i < v.frames; ++i) {
      const FrameSample s = load_frame(layout, v.id, i);
      acc.add(v.id, score_frame(predict_frame(model, s, size).s_f, s.gt, constants));
    }
  return acc.finish();
}

} // namespace atf
