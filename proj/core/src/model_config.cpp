// SPDX-License-Identifier: Apache-2.0
#include "atf/model_config.hpp"

#include <stdexcept>

#include "atf/error.hpp"

namespace atf {

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.encoder_channels = {16, 32, 64, 128, 256};
  c.c_dec = 16;
  c.c_fuse = 16;
  c.input_size = 64;
  return c;
}

void ModelConfig::validate() const {
  for (std::size_t i = 0; i < encoder_channels.size(); ++i) {
    if (encoder_channels[i] == 0)
      fail(ErrorKind::kConfig, "encoder_channels[" + std::to_string(i) + "] is 0");
    if (encoder_channels[i] % 2 != 0)
      fail(ErrorKind::kChannel, "encoder_channels[" + std::to_string(i) +
                                    "] = " + std::to_string(encoder_channels[i]) +
                                    " must be even");
  }
  if (c_dec == 0 || c_fuse == 0)
    fail(ErrorKind::kConfig, "c_dec and c_fuse must be positive");
  if (input_size == 0 || input_size % 32 != 0)
    fail(ErrorKind::kConfig, "input_size must be a positive multiple of 32");
  if (backbone != "residual5")
    fail(ErrorKind::kConfig, "backbone '" + backbone +
                                 "' unsupported (available: residual5)");
  if (norm.groups == 0)
    fail(ErrorKind::kConfig, "norm_groups must be positive");
}

namespace {

std::size_t positive(const std::string &v) {
  const auto i = parse_int(v);
  if (i <= 0)
    throw std::invalid_argument("'" + v + "' must be positive");
  return static_cast<std::size_t>(i);
}

std::string b2s(bool b) { return b ? "true" : "false"; }

} // namespace

const Schema<ModelConfig> &model_config_schema() {
  static const Schema<ModelConfig> schema = {
      {"encoder_channels", "five comma-separated even positive integers",
       [](ModelConfig &c, const std::string &v) {
         const auto list = parse_int_list(v);
         if (list.size() != 5)
           throw std::invalid_argument("need exactly 5 channel counts");
         for (std::size_t i = 0; i < 5; ++i) {
           if (list[i] <= 0)
             throw std::invalid_argument("channel counts must be positive");
           c.encoder_channels[i] = static_cast<std::size_t>(list[i]);
         }
       },
       [](const ModelConfig &c) {
         std::string s;
         for (std::size_t i = 0; i < 5; ++i)
           s += (i ? "," : "") + std::to_string(c.encoder_channels[i]);
         return s;
       }},
      {"c_dec", "positive integer, decoder width",
       [](ModelConfig &c, const std::string &v) { c.c_dec = positive(v); },
       [](const ModelConfig &c) { return std::to_string(c.c_dec); }},
      {"c_fuse", "positive integer, fusion width",
       [](ModelConfig &c, const std::string &v) { c.c_fuse = positive(v); },
       [](const ModelConfig &c) { return std::to_string(c.c_fuse); }},
      {"input_size", "positive multiple of 32",
       [](ModelConfig &c, const std::string &v) {
         c.input_size = positive(v);
         if (c.input_size % 32)
           throw std::invalid_argument("'" + v + "' is not a multiple of 32");
       },
       [](const ModelConfig &c) { return std::to_string(c.input_size); }},
      {"flow_input", "rendered3 | raw2",
       [](ModelConfig &c, const std::string &v) {
         if (v == "rendered3")
           c.flow_input = FlowInput::kRendered3;
         else if (v == "raw2")
           c.flow_input = FlowInput::kRaw2;
         else
           throw std::invalid_argument("'" + v + "' is not a flow input mode");
       },
       [](const ModelConfig &c) {
         return std::string(c.flow_input == FlowInput::kRendered3 ? "rendered3"
                                                                  : "raw2");
       }},
      {"use_depth_branch", "boolean",
       [](ModelConfig &c, const std::string &v) { c.use_depth_branch = parse_bool(v); },
       [](const ModelConfig &c) { return b2s(c.use_depth_branch); }},
      {"use_flow_branch", "boolean",
       [](ModelConfig &c, const std::string &v) { c.use_flow_branch = parse_bool(v); },
       [](const ModelConfig &c) { return b2s(c.use_flow_branch); }},
      {"use_mea", "boolean",
       [](ModelConfig &c, const std::string &v) { c.use_mea = parse_bool(v); },
       [](const ModelConfig &c) { return b2s(c.use_mea); }},
      {"use_mda", "boolean",
       [](ModelConfig &c, const std::string &v) { c.use_mda = parse_bool(v); },
       [](const ModelConfig &c) { return b2s(c.use_mda); }},
      {"use_attention_blocks", "boolean",
       [](ModelConfig &c, const std::string &v) { c.use_attention_blocks = parse_bool(v); },
       [](const ModelConfig &c) { return b2s(c.use_attention_blocks); }},
      {"backbone", "residual5",
       [](ModelConfig &c, const std::string &v) { c.backbone = v; },
       [](const ModelConfig &c) { return c.backbone; }},
      {"norm", "group | batch",
       [](ModelConfig &c, const std::string &v) {
         if (v == "group")
           c.norm.kind = NormKind::kGroup;
         else if (v == "batch")
           c.norm.kind = NormKind::kBatch;
         else
           throw std::invalid_argument("'" + v + "' is not a normalization mode");
       },
       [](const ModelConfig &c) {
         return std::string(c.norm.kind == NormKind::kGroup ? "group" : "batch");
       }},
      {"norm_groups", "positive integer (group mode)",
       [](ModelConfig &c, const std::string &v) { c.norm.groups = positive(v); },
       [](const ModelConfig &c) { return std::to_string(c.norm.groups); }},
  };
  return schema;
}

std::string ModelConfig::to_text() const {
  return print_schema(model_config_schema(), *this);
}

ModelConfig model_config_from(const KeyValues &kv) {
  ModelConfig config;
  KeyValues rest;
  for (const auto &[key, value] : kv.items()) {
    if (key == "preset") {
      if (value == "tiny")
        config = ModelConfig::tiny();
      else if (value != "default")
        fail(ErrorKind::kConfig,
             "key 'preset': '" + value + "' (expected tiny | default)");
    } else {
      rest.set(key, value);
    }
  }
  apply_schema(model_config_schema(), rest, config);
  config.validate();
  return config;
}

} // namespace atf
