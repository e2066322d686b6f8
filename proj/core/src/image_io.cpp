// SPDX-License-Identifier: Apache-2.0
#include "atf/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "atf/error.hpp"
#include "atf/ops.hpp"

namespace atf {

namespace {

cv::Mat load(const std::filesystem::path &path) {
  if (!std::filesystem::exists(path))
    fail(ErrorKind::kMissingFile, "missing " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty())
    fail(ErrorKind::kIo, "cannot decode " + path.string());
  if (m.depth() != CV_8U && m.depth() != CV_16U)
    fail(ErrorKind::kIo, path.string() + ": unsupported bit depth");
  return m;
}

real code_scale(const cv::Mat &m) { return m.depth() == CV_16U ? 65535.0 : 255.0; }

real code_at(const cv::Mat &m, int y, int x, int c) {
  const int ch = m.channels();
  if (m.depth() == CV_16U)
    return m.ptr<std::uint16_t>(y)[x * ch + c];
  return m.ptr<std::uint8_t>(y)[x * ch + c];
}

void save(const std::filesystem::path &path, const cv::Mat &m) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), m))
    fail(ErrorKind::kIo, "cannot write " + path.string());
}

template <typename T>
cv::Mat encode(const Tensor &t, std::size_t channels, int type, real scale,
               const char *what) {
  if (t.rank() != 3 || t.dim(0) != channels)
    fail(ErrorKind::kShape, std::string(what) + " expects " + std::to_string(channels) +
                                " x H x W, got " + shape_str(t.shape()));
  const std::size_t h = t.dim(1), w = t.dim(2);
  cv::Mat m(static_cast<int>(h), static_cast<int>(w), type);
  for (std::size_t y = 0; y < h; ++y) {
    T *row = m.ptr<T>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c) {
        // OpenCV stores colour as BGR.
        const std::size_t src = channels == 3 ? 2 - c : c;
        const real v = std::clamp(t[(src * h + y) * w + x], real{0}, real{1});
        row[x * channels + c] = static_cast<T>(std::lround(v * scale));
      }
  }
  return m;
}

} // namespace

Tensor read_rgb_png(const std::filesystem::path &path) {
  const cv::Mat m = load(path);
  const int ch = m.channels();
  if (ch != 1 && ch != 3 && ch != 4)
    fail(ErrorKind::kIo, path.string() + ": unsupported channel count");
  const auto h = static_cast<std::size_t>(m.rows), w = static_cast<std::size_t>(m.cols);
  const real scale = code_scale(m);
  Tensor out({3, h, w});
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x)
      for (int c = 0; c < 3; ++c) {
        const int src = ch == 1 ? 0 : 2 - c;
        out[(static_cast<std::size_t>(c) * h + y) * w + x] = code_at(m, y, x, src) / scale;
      }
  return out;
}

Tensor read_gray_png(const std::filesystem::path &path) {
  const cv::Mat m = load(path);
  if (m.channels() != 1)
    fail(ErrorKind::kIo, path.string() + ": expected a single-channel image");
  const auto h = static_cast<std::size_t>(m.rows), w = static_cast<std::size_t>(m.cols);
  const real scale = code_scale(m);
  Tensor out({1, h, w});
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x)
      out[static_cast<std::size_t>(y) * w + x] = code_at(m, y, x, 0) / scale;
  return out;
}

Tensor read_mask_png(const std::filesystem::path &path) {
  const cv::Mat m = load(path);
  if (m.channels() != 1)
    fail(ErrorKind::kInvalidMask, path.string() + ": mask must be single-channel");
  const auto h = static_cast<std::size_t>(m.rows), w = static_cast<std::size_t>(m.cols);
  const real top = code_scale(m);
  Tensor out({1, h, w});
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const real v = code_at(m, y, x, 0);
      if (v != 0 && v != top)
        fail(ErrorKind::kInvalidMask,
             path.string() + ": pixel (" + std::to_string(y) + ", " + std::to_string(x) +
                 ") has value " + std::to_string(static_cast<long>(v)) +
                 "; masks must be binary");
      out[static_cast<std::size_t>(y) * w + x] = v == 0 ? 0 : 1;
    }
  return out;
}

ImageSize read_png_size(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::kMissingFile, "missing " + path.string());
  unsigned char head[24];
  in.read(reinterpret_cast<char *>(head), sizeof head);
  static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (in.gcount() != 24 || !std::equal(kSig, kSig + 8, head) ||
      std::string(reinterpret_cast<char *>(head) + 12, 4) != "IHDR")
    fail(ErrorKind::kIo, path.string() + ": not a PNG file");
  auto be32 = [&](int off) {
    return (std::size_t{head[off]} << 24) | (std::size_t{head[off + 1]} << 16) |
           (std::size_t{head[off + 2]} << 8) | std::size_t{head[off + 3]};
  };
  return {be32(20), be32(16)};
}

Tensor resize_chw(const Tensor &image, std::size_t height, std::size_t width) {
  if (image.rank() != 3)
    fail(ErrorKind::kShape, "resize_chw expects C x H x W, got " + shape_str(image.shape()));
  if (image.dim(1) == height && image.dim(2) == width)
    return image;
  const std::size_t c = image.dim(0);
  return nn::resize_bilinear(image.reshaped({1, c, image.dim(1), image.dim(2)}), height, width)
      .reshaped({c, height, width});
}

void write_rgb_png(const std::filesystem::path &path, const Tensor &rgb) {
  save(path, encode<std::uint8_t>(rgb, 3, CV_8UC3, 255, "write_rgb_png"));
}

void write_gray8_png(const std::filesystem::path &path, const Tensor &gray) {
  save(path, encode<std::uint8_t>(gray, 1, CV_8UC1, 255, "write_gray8_png"));
}

void write_gray16_png(const std::filesystem::path &path, const Tensor &gray) {
  save(path, encode<std::uint16_t>(gray, 1, CV_16UC1, 65535, "write_gray16_png"));
}

} // namespace atf
