// Copyright 2026 The uwe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Training configuration and its JSON representation. Every key is
// optional; unknown keys are rejected by name.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwe/errors.hpp"
#include "uwe/gac.hpp"
#include "uwe/losses.hpp"
#include "uwe/model.hpp"

namespace uwe {

struct AblationFlags {
  bool sfi = true;
  bool curricular = true;
  bool use_ls1 = true;
  bool use_lg = true;
  bool learnable_alpha = true;

  bool operator==(const AblationFlags&) const = default;
};

struct TrainConfig {
  long total_steps = 2000;
  int batch_size = 5;
  int patch = 256;
  double lr_max = 1e-3;
  double lr_min = 1e-6;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;
  LossWeights weights{};
  AblationFlags ablation{};
  bool use_perceptual = true;
  LambdaFormula lambda_formula = LambdaFormula::continuous;
  std::uint64_t seed = 0;
  int width1 = 16;
  int width2 = 32;
  int width3 = 64;
  int blocks = 4;
  bool flip_augment = false;
  long checkpoint_every = 500;
  // Paths (used by the CLI).
  std::string input_dir;
  std::string label_dir;
  std::string run_dir = "runs/default";
  int train_count = 0;  // 0: use every pair for training

  ModelConfig model_config() const {
    ModelConfig m;
    m.net.width1 = width1;
    m.net.width2 = width2;
    m.net.width3 = width3;
    m.net.blocks = blocks;
    m.net.sfi = ablation.sfi;
    m.net.seed = seed;
    m.gac.curricular = ablation.curricular;
    m.gac.formula = lambda_formula;
    return m;
  }

  void validate() const {
    auto bad = [](const std::string& field, const std::string& why) {
      throw ConfigError("config field '" + field + "': " + why);
    };
    if (total_steps < 1) bad("total_steps", "must be positive");
    if (batch_size < 1) bad("batch_size", "must be positive");
    if (patch < 4 || patch % 4 != 0) bad("patch", "must be a positive multiple of 4");
    if (!(lr_min >= 0.0)) bad("lr_min", "must be >= 0");
    if (!(lr_min <= lr_max)) bad("lr_min", "must not exceed lr_max");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) bad("adam_beta1", "must lie in [0,1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) bad("adam_beta2", "must lie in [0,1)");
    if (!(clip_norm > 0.0)) bad("clip_norm", "must be positive");
    if (weights.gamma1 < 0.0) bad("gamma1", "must be >= 0");
    if (weights.gamma2 < 0.0) bad("gamma2", "must be >= 0");
    if (weights.gamma3 < 0.0) bad("gamma3", "must be >= 0");
    if (width1 < 1 || width2 < 1 || width3 < 1) bad("width", "must be positive");
    if (blocks < 1) bad("blocks", "must be positive");
    if (checkpoint_every < 1) bad("checkpoint_every", "must be positive");
    if (train_count < 0) bad("train_count", "must be >= 0");
  }
};

inline std::string to_string(LambdaFormula f) {
  return f == LambdaFormula::continuous ? "continuous" : "paper-literal";
}

inline LambdaFormula parse_lambda_formula(const std::string& s) {
  if (s == "continuous") return LambdaFormula::continuous;
  if (s == "paper-literal") return LambdaFormula::paper_literal;
  throw ConfigError("config field 'lambda_formula': unknown value '" + s +
                    "' (expected continuous or paper-literal)");
}

/// Applies one `--ablate` switch.
inline void apply_ablation(AblationFlags& flags, const std::string& name) {
  if (name == "no-sfi")
    flags.sfi = false;
  else if (name == "no-cl")
    flags.curricular = false;
  else if (name == "no-ls1")
    flags.use_ls1 = false;
  else if (name == "no-lg")
    flags.use_lg = false;
  else if (name == "fixed-alpha")
    flags.learnable_alpha = false;
  else
    throw ConfigError("unknown ablation '" + name +
                      "' (expected no-sfi, no-cl, no-ls1, no-lg or fixed-alpha)");
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"total_steps", c.total_steps},
      {"batch_size", c.batch_size},
      {"patch", c.patch},
      {"lr_max", c.lr_max},
      {"lr_min", c.lr_min},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_eps", c.adam_eps},
      {"clip_norm", c.clip_norm},
      {"gamma1", c.weights.gamma1},
      {"gamma2", c.weights.gamma2},
      {"gamma3", c.weights.gamma3},
      {"sfi", c.ablation.sfi},
      {"curricular", c.ablation.curricular},
      {"use_ls1", c.ablation.use_ls1},
      {"use_lg", c.ablation.use_lg},
      {"learnable_alpha", c.ablation.learnable_alpha},
      {"use_perceptual", c.use_perceptual},
      {"lambda_formula", to_string(c.lambda_formula)},
      {"seed", c.seed},
      {"width1", c.width1},
      {"width2", c.width2},
      {"width3", c.width3},
      {"blocks", c.blocks},
      {"flip_augment", c.flip_augment},
      {"checkpoint_every", c.checkpoint_every},
      {"input_dir", c.input_dir},
      {"label_dir", c.label_dir},
      {"run_dir", c.run_dir},
      {"train_count", c.train_count},
  };
}

namespace detail {

template <typename V>
void read_field(const nlohmann::json& j, const std::string& key, V& out) {
  try {
    out = j.get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "': wrong type");
  }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `c`.
inline void apply_json(TrainConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    using detail::read_field;
    if (k == "total_steps") read_field(v, k, c.total_steps);
    else if (k == "batch_size") read_field(v, k, c.batch_size);
    else if (k == "patch") read_field(v, k, c.patch);
    else if (k == "lr_max") read_field(v, k, c.lr_max);
    else if (k == "lr_min") read_field(v, k, c.lr_min);
    else if (k == "adam_beta1") read_field(v, k, c.adam_beta1);
    else if (k == "adam_beta2") read_field(v, k, c.adam_beta2);
    else if (k == "adam_eps") read_field(v, k, c.adam_eps);
    else if (k == "clip_norm") read_field(v, k, c.clip_norm);
    else if (k == "gamma1") read_field(v, k, c.weights.gamma1);
    else if (k == "gamma2") read_field(v, k, c.weights.gamma2);
    else if (k == "gamma3") read_field(v, k, c.weights.gamma3);
    else if (k == "sfi") read_field(v, k, c.ablation.sfi);
    else if (k == "curricular") read_field(v, k, c.ablation.curricular);
    else if (k == "use_ls1") read_field(v, k, c.ablation.use_ls1);
    else if (k == "use_lg") read_field(v, k, c.ablation.use_lg);
    else if (k == "learnable_alpha") read_field(v, k, c.ablation.learnable_alpha);
    else if (k == "use_perceptual") read_field(v, k, c.use_perceptual);
    else if (k == "lambda_formula") {
      std::string s;
      read_field(v, k, s);
      c.lambda_formula = parse_lambda_formula(s);
    }
    else if (k == "seed") read_field(v, k, c.seed);
    else if (k == "width1") read_field(v, k, c.width1);
    else if (k == "width2") read_field(v, k, c.width2);
    else if (k == "width3") read_field(v, k, c.width3);
    else if (k == "blocks") read_field(v, k, c.blocks);
    else if (k == "flip_augment") read_field(v, k, c.flip_augment);
    else if (k == "checkpoint_every") read_field(v, k, c.checkpoint_every);
    else if (k == "input_dir") read_field(v, k, c.input_dir);
    else if (k == "label_dir") read_field(v, k, c.label_dir);
    else if (k == "run_dir") read_field(v, k, c.run_dir);
    else if (k == "train_count") read_field(v, k, c.train_count);
    else throw ConfigError("unknown config key '" + k + "'");
  }
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  apply_json(c, j);
  c.validate();
  return c;
}

inline TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace uwe
