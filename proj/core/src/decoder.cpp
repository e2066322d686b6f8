// SPDX-License-Identifier: Apache-2.0
#include "atf/decoder.hpp"

#include "atf/error.hpp"
#include "atf/ops.hpp"

namespace atf {

DecoderParams build_decoder(ParamStore &store, const std::string &prefix,
                            const ModelConfig &config, Rng &rng) {
  DecoderParams p;
  const std::size_t c = config.c_dec;
  for (std::size_t i = 1; i <= 4; ++i)
    p.skip[i - 1] = make_projection(store, prefix + ".skip" + std::to_string(i),
                                    config.encoder_channels[i - 1], c, rng);
  p.fuse[4] = make_bconv(store, prefix + ".fuse5", config.encoder_channels[4],
                         c, config.norm, rng);
  for (std::size_t i = 1; i <= 4; ++i)
    p.fuse[i - 1] = make_bconv(store, prefix + ".fuse" + std::to_string(i),
                               2 * c, c, config.norm, rng);
  return p;
}

HeadParams build_head(ParamStore &store, const std::string &prefix,
                      std::size_t in_channels, Rng &rng) {
  HeadParams h;
  h.proj = make_projection(store, prefix + ".proj", in_channels, 1, rng);
  return h;
}

DecoderFeatures decode_branch(const DecoderParams &params,
                              const FeaturePyramid &pyramid,
                              const RunContext &ctx) {
  for (const auto &level : pyramid.levels)
    if (!level.defined())
      fail(ErrorKind::kShape, "decode_branch needs all five pyramid levels");
  DecoderFeatures out;
  out.levels[4] = bconv(params.fuse[4], pyramid.level(5), ctx);
  for (std::size_t i = 4; i >= 1; --i) {
    const Var &skip_in = pyramid.level(i);
    const Var &deeper = out.levels[i];
    if (skip_in.dim(2) != 2 * deeper.dim(2) || skip_in.dim(3) != 2 * deeper.dim(3))
      fail(ErrorKind::kShape, "pyramid level " + std::to_string(i) + " " +
                                  shape_str(skip_in.shape()) +
                                  " is not twice level " + std::to_string(i + 1));
    Var up = nn::resize_bilinear(deeper, skip_in.dim(2), skip_in.dim(3));
    Var skip = apply_conv(params.skip[i - 1], skip_in);
    out.levels[i - 1] = bconv(params.fuse[i - 1], nn::concat_channels({up, skip}), ctx);
  }
  return out;
}

Var predict_saliency(const HeadParams &head, const Var &d1, std::size_t out_h,
                     std::size_t out_w) {
  if (!d1.defined() || d1.value().rank() != 4 ||
      d1.dim(1) != head.proj.in_channels())
    fail(ErrorKind::kShape, "saliency head expects " +
                                std::to_string(head.proj.in_channels()) +
                                " channels");
  Var prob = nn::sigmoid(apply_conv(head.proj, d1));
  if (prob.dim(2) == out_h && prob.dim(3) == out_w)
    return prob;
  return nn::resize_bilinear(prob, out_h, out_w);
}

} // namespace atf
