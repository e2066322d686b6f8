// SPDX-License-Identifier: Apache-2.0
#include "atf/backbone.hpp"

#include "atf/error.hpp"
#include "atf/ops.hpp"

namespace atf {

std::string_view to_string(Modality m) {
  switch (m) {
  case Modality::kRgb:
    return "rgb";
  case Modality::kFlow:
    return "flow";
  case Modality::kDepth:
    return "depth";
  }
  return "?";
}

std::size_t input_channels(const ModelConfig &config, Modality m) {
  switch (m) {
  case Modality::kRgb:
    return 3;
  case Modality::kDepth:
    return 1;
  case Modality::kFlow:
    return config.flow_channels();
  }
  return 0;
}

EncoderParams build_encoder(ParamStore &store, const std::string &prefix,
                            const ModelConfig &config, Modality modality,
                            Rng &rng) {
  config.validate();
  EncoderParams p;
  p.modality = modality;
  p.in_channels = input_channels(config, modality);
  std::size_t in = p.in_channels;
  for (std::size_t i = 0; i < 5; ++i) {
    const std::size_t out = config.encoder_channels[i];
    const std::string name = prefix + ".stage" + std::to_string(i + 1);
    EncoderStage &s = p.stages[i];
    s.down = make_conv(store, name + ".down", in, out, 3, 2, rng);
    s.down_norm = make_norm(store, name + ".down_norm", out, config.norm);
    s.residual = make_conv(store, name + ".residual", out, out, 3, 1, rng);
    s.residual_norm = make_norm(store, name + ".residual_norm", out, config.norm);
    in = out;
  }
  return p;
}

FeaturePyramid encode(const EncoderParams &params, const Var &image,
                      const RunContext &ctx) {
  if (!image.defined() || image.value().rank() != 4)
    fail(ErrorKind::kShape, "encode expects an N x C x H x W image");
  if (image.dim(1) != params.in_channels)
    fail(ErrorKind::kShape,
         std::string(to_string(params.modality)) + " encoder expects " +
             std::to_string(params.in_channels) + " channels, got " +
             shape_str(image.shape()));
  if (image.dim(2) % 32 != 0 || image.dim(3) % 32 != 0 || image.dim(2) == 0 ||
      image.dim(3) == 0)
    fail(ErrorKind::kShape, "encoder input " + shape_str(image.shape()) +
                                " is not divisible by 32");
  FeaturePyramid pyr;
  pyr.modality = params.modality;
  Var x = image;
  for (std::size_t i = 0; i < 5; ++i) {
    const EncoderStage &s = params.stages[i];
    Var h = nn::relu(apply_norm(s.down_norm, apply_conv(s.down, x), ctx));
    Var r = apply_norm(s.residual_norm, apply_conv(s.residual, h), ctx);
    x = nn::relu(nn::add(h, r));
    pyr.levels[i] = x;
  }
  return pyr;
}

} // namespace atf
