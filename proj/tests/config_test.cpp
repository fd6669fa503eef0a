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


#include <fstream>

#include <gtest/gtest.h>

#include "support/toy_data.hpp"
#include "uwe/config.hpp"

namespace uwe {
namespace {

std::string config_error(const nlohmann::json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.exit_code(), 1);
    return e.what();
  }
  ADD_FAILURE() << "no ConfigError for " << j.dump();
  return {};
}

TEST(Config, DefaultsFollowTheTrainingRecipe) {
  const TrainConfig c;
  EXPECT_EQ(c.batch_size, 5);
  EXPECT_EQ(c.patch, 256);
  EXPECT_EQ(c.lr_max, 1e-3);
  EXPECT_EQ(c.lr_min, 1e-6);
  EXPECT_EQ(c.adam_beta1, 0.9);
  EXPECT_EQ(c.adam_beta2, 0.999);
  EXPECT_EQ(c.total_steps, 2000);
  EXPECT_EQ(c.clip_norm, 1.0);
  EXPECT_EQ(c.ablation, AblationFlags{});
  EXPECT_EQ(c.lambda_formula, LambdaFormula::continuous);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, EmptyObjectGivesDefaults) {
  EXPECT_EQ(to_json(config_from_json(nlohmann::json::object())), to_json(TrainConfig{}));
}

TEST(Config, UnknownKeyIsNamed) {
  EXPECT_NE(config_error({{"learning_rate", 0.1}}).find("'learning_rate'"), std::string::npos);
}

TEST(Config, WrongTypeNamesTheField) {
  EXPECT_NE(config_error({{"batch_size", "five"}}).find("'batch_size'"), std::string::npos);
  EXPECT_NE(config_error({{"sfi", 3.5}}).find("'sfi'"), std::string::npos);
  EXPECT_NE(config_error(nlohmann::json::array()).find("object"), std::string::npos);
}

TEST(Config, ValidationNamesTheField) {
  EXPECT_NE(config_error({{"lr_min", 1e-2}}).find("'lr_min'"), std::string::npos);
  EXPECT_NE(config_error({{"total_steps", 0}}).find("'total_steps'"), std::string::npos);
  EXPECT_NE(config_error({{"patch", 30}}).find("'patch'"), std::string::npos);
  EXPECT_NE(config_error({{"adam_beta2", 1.0}}).find("'adam_beta2'"), std::string::npos);
  EXPECT_NE(config_error({{"gamma3", -1.0}}).find("'gamma3'"), std::string::npos);
  EXPECT_NE(config_error({{"lambda_formula", "cubic"}}).find("'lambda_formula'"), std::string::npos);
}

TEST(Config, JsonRoundTrip) {
  TrainConfig c;
  c.total_steps = 77;
  c.batch_size = 2;
  c.patch = 32;
  c.weights = {0.5, 0.25, 2.0};
  c.ablation.sfi = false;
  c.ablation.learnable_alpha = false;
  c.lambda_formula = LambdaFormula::paper_literal;
  c.seed = 1234567890123ULL;
  c.flip_augment = true;
  c.input_dir = "in";
  c.run_dir = "runs/x";
  c.train_count = 3;
  const auto j = to_json(c);
  EXPECT_EQ(to_json(config_from_json(j)), j);
  EXPECT_EQ(j["sfi"], false);
  EXPECT_EQ(j["lambda_formula"], "paper-literal");
}

TEST(Config, LoadFromFile) {
  testing::TempDir dir("cfg");
  std::ofstream(dir.path() / "ok.json") << R"({"total_steps": 12, "patch": 64})";
  std::ofstream(dir.path() / "bad.json") << "{ total_steps: ";
  const auto c = load_config((dir.path() / "ok.json").string());
  EXPECT_EQ(c.total_steps, 12);
  EXPECT_EQ(c.patch, 64);
  EXPECT_THROW(load_config((dir.path() / "bad.json").string()), ConfigError);
  EXPECT_THROW(load_config((dir.path() / "none.json").string()), ConfigError);
}

TEST(Ablation, EachSwitchClearsExactlyOneFlag) {
  const std::pair<const char*, bool AblationFlags::*> cases[] = {
      {"no-sfi", &AblationFlags::sfi},
      {"no-cl", &AblationFlags::curricular},
      {"no-ls1", &AblationFlags::use_ls1},
      {"no-lg", &AblationFlags::use_lg},
      {"fixed-alpha", &AblationFlags::learnable_alpha},
  };
  for (const auto& [name, member] : cases) {
    AblationFlags f;
    apply_ablation(f, name);
    EXPECT_FALSE(f.*member) << name;
    AblationFlags expected;
    expected.*member = false;
    EXPECT_EQ(f, expected) << name;
  }
  AblationFlags f;
  try {
    apply_ablation(f, "no-gac");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("no-gac"), std::string::npos);
  }
}

TEST(Ablation, FlagsReachTheModelConfig) {
  TrainConfig c;
  c.ablation.sfi = false;
  c.ablation.curricular = false;
  c.lambda_formula = LambdaFormula::paper_literal;
  c.width1 = 4;
  c.blocks = 2;
  const ModelConfig m = c.model_config();
  EXPECT_FALSE(m.net.sfi);
  EXPECT_FALSE(m.gac.curricular);
  EXPECT_EQ(m.gac.formula, LambdaFormula::paper_literal);
  EXPECT_EQ(m.net.width1, 4);
  EXPECT_EQ(m.net.blocks, 2);
}

}  // namespace
}  // namespace uwe
