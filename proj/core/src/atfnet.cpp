// SPDX-License-Identifier: Apache-2.0
#include "atf/atfnet.hpp"

#include <vector>

#include "atf/error.hpp"
#include "atf/ops.hpp"

namespace atf {

AtfNet::AtfNet(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.validate();
  Rng rng(seed);
  auto make_branch = [&](Modality m) {
    const std::string name(to_string(m));
    Branch b;
    b.encoder = build_encoder(store_, name + ".encoder", config_, m, rng);
    b.decoder = build_decoder(store_, name + ".decoder", config_, rng);
    b.head = build_head(store_, name + ".head", config_.c_dec, rng);
    return b;
  };
  rgb_ = make_branch(Modality::kRgb);
  if (config_.use_flow_branch)
    flow_ = make_branch(Modality::kFlow);
  if (config_.use_depth_branch)
    depth_ = make_branch(Modality::kDepth);

  const std::size_t branches = 1 + (flow_ ? 1 : 0) + (depth_ ? 1 : 0);
  const std::size_t cf = config_.c_fuse;
  for (std::size_t i = 1; i <= 5; ++i) {
    const std::string name = "fusion.encoder" + std::to_string(i);
    const std::size_t c = config_.encoder_channels[i - 1];
    if (config_.mea_active())
      mea_[i - 1] = build_mea(store_, name + ".mea", i, c, cf, config_.norm, rng);
    else
      encoder_concat_[i - 1] = build_concat_fuse(
          store_, name + ".concat", (i > 1 ? cf : 0) + branches * c, cf, rng);
  }
  phi0_ = make_bconv(store_, "fusion.phi0", cf, cf, config_.norm, rng);
  for (std::size_t j = 1; j <= 4; ++j) {
    const std::string name = "fusion.decoder" + std::to_string(j);
    if (config_.mda_active())
      mda_[j - 1] = build_mda(store_, name + ".mda", j, config_.c_dec, cf,
                              config_.use_attention_blocks, config_.norm, rng);
    else
      decoder_concat_[j - 1] = build_concat_fuse(
          store_, name + ".concat", cf + branches * config_.c_dec, cf, rng);
  }
  fused_head_ = build_head(store_, "fusion.head", cf, rng);
}

SaliencyOutputs AtfNet::forward(const Var &rgb, const Var &depth,
                                const Var &flow, const RunContext &ctx) const {
  if (!rgb.defined() || rgb.value().rank() != 4)
    fail(ErrorKind::kShape, "rgb input must be N x 3 x H x W");
  const std::size_t n = rgb.dim(0), h = rgb.dim(2), w = rgb.dim(3);
  auto check_aux = [&](const Var &x, const char *what) {
    if (!x.defined() || x.value().rank() != 4 || x.dim(0) != n ||
        x.dim(2) != h || x.dim(3) != w)
      fail(ErrorKind::kShape, std::string(what) + " input must match rgb " +
                                  shape_str(rgb.shape()) + " in N, H, W");
  };
  if (flow_)
    check_aux(flow, "flow");
  if (depth_)
    check_aux(depth, "depth");

  SaliencyOutputs out;
  const FeaturePyramid f_rgb = encode(rgb_.encoder, rgb, ctx);
  const DecoderFeatures d_rgb = decode_branch(rgb_.decoder, f_rgb, ctx);
  out.s_rgb = predict_saliency(rgb_.head, d_rgb.level(1), h, w);

  std::optional<FeaturePyramid> f_flow, f_depth;
  std::optional<DecoderFeatures> d_flow, d_depth;
  if (flow_) {
    f_flow = encode(flow_->encoder, flow, ctx);
    d_flow = decode_branch(flow_->decoder, *f_flow, ctx);
    out.s_flow = predict_saliency(flow_->head, d_flow->level(1), h, w);
  }
  if (depth_) {
    f_depth = encode(depth_->encoder, depth, ctx);
    d_depth = decode_branch(depth_->decoder, *f_depth, ctx);
    out.s_depth = predict_saliency(depth_->head, d_depth->level(1), h, w);
  }

  Var theta;
  for (std::size_t i = 1; i <= 5; ++i) {
    if (config_.mea_active()) {
      std::optional<Var> prev;
      if (i > 1)
        prev = theta;
      theta = mea_forward(mea_[i - 1], f_rgb.level(i), f_flow->level(i),
                          f_depth->level(i), prev, ctx);
    } else {
      std::vector<Var> parts;
      if (i > 1)
        parts.push_back(nn::max_pool2d(theta, 2, 2, 0));
      parts.push_back(f_rgb.level(i));
      if (f_flow)
        parts.push_back(f_flow->level(i));
      if (f_depth)
        parts.push_back(f_depth->level(i));
      theta = concat_fuse(encoder_concat_[i - 1], parts);
    }
  }

  Var phi = bconv(phi0_, theta, ctx);
  for (std::size_t j = 1; j <= 4; ++j) {
    const std::size_t level = 5 - j;
    const Var &k_rgb = d_rgb.level(level);
    if (config_.mda_active()) {
      phi = mda_forward(mda_[j - 1], k_rgb, d_flow->level(level),
                        d_depth->level(level), phi, ctx);
    } else {
      std::vector<Var> parts;
      parts.push_back(nn::resize_bilinear(phi, k_rgb.dim(2), k_rgb.dim(3)));
      parts.push_back(k_rgb);
      if (d_flow)
        parts.push_back(d_flow->level(level));
      if (d_depth)
        parts.push_back(d_depth->level(level));
      phi = concat_fuse(decoder_concat_[j - 1], parts);
    }
  }
  out.s_f = predict_saliency(fused_head_, phi, h, w);
  return out;
}

} // namespace atf
