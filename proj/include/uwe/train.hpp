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

// Joint optimization of both stages: one Adam step on the weighted total
// loss per batch, cosine-annealed learning rate, global-norm clipping,
// checkpointing and resumption.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uwe/checkpoint.hpp"
#include "uwe/config.hpp"
#include "uwe/data.hpp"
#include "uwe/inference.hpp"
#include "uwe/losses.hpp"
#include "uwe/model.hpp"
#include "uwe/optim.hpp"

namespace uwe {

struct StepStats {
  long step = 0;  // 1-based index of the update
  double lr = 0.0;
  double l_s1 = 0.0;
  double l_g = 0.0;
  double l_s2 = 0.0;
  double l_total = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;

  bool operator==(const StepStats&) const = default;
};

/// Tab-separated metrics line: step, lr, L_s1, L_g, L_s2, L_total, lambda, alpha.
inline std::string format_metrics_line(const StepStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%ld\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g", s.step, s.lr,
                s.l_s1, s.l_g, s.l_s2, s.l_total, s.lambda, s.alpha);
  return buf;
}

inline constexpr const char* kMetricsHeader = "step\tlr\tL_s1\tL_g\tL_s2\tL_total\tlambda\talpha";

inline std::filesystem::path checkpoint_dir(const std::filesystem::path& run_dir, long step) {
  return run_dir / ("ckpt_" + std::to_string(step));
}

template <typename T>
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg)
      : cfg_(std::move(cfg)),
        model_(std::make_unique<Enhancer<T>>(cfg_.model_config())),
        phi_(std::make_unique<RandomConvExtractor<T>>()) {
    cfg_.validate();
    build_optimizer();
  }

  const TrainConfig& config() const { return cfg_; }
  Enhancer<T>& model() { return *model_; }
  const Enhancer<T>& model() const { return *model_; }
  long step() const { return step_; }
  const FeatureExtractor<T>& extractor() const { return *phi_; }
  const std::string& last_checkpoint() const { return last_checkpoint_; }

  double lr_for_update(long update_index) const {
    return cosine_lr(update_index, cfg_.total_steps, cfg_.lr_max, cfg_.lr_min);
  }

  /// One forward/backward pass over `batch` and one Adam update.
  StepStats train_step(const Batch<T>& batch) {
    StepStats s;
    s.step = step_ + 1;
    s.lr = lr_for_update(step_);
    Var<T> total;
    try {
      const Var<T> x_in = Var<T>::constant(batch.input);
      const Var<T> x_gt = Var<T>::constant(batch.label);
      const Var<T> g_gt = Var<T>::constant(sobel_gradient(batch.label));

      const Var<T> x_out1 = model_->net()(x_in);
      const GacResult<T> gac =
          gac_forward<T>(x_out1, g_gt, model_->corrector(), true, model_->config().gac);
      const Var<T> l_s1 = amplitude_loss(cfg_.ablation.use_ls1 ? x_out1 : x_out1.detach(), x_gt);
      const Var<T> l_s2 =
          stage2_loss(gac.x_out2, x_gt, cfg_.use_perceptual ? phi_.get() : nullptr);
      total = total_loss(cfg_.ablation.use_ls1 ? l_s1 : Var<T>{}, l_s2,
                         cfg_.ablation.use_lg ? gac.loss_g : Var<T>{}, cfg_.weights);
      s.l_s1 = l_s1.item();
      s.l_g = gac.loss_g.item();
      s.l_s2 = l_s2.item();
      s.l_total = total.item();
      s.lambda = gac.state.lambda;
      if (!std::isfinite(s.l_total)) throw NumericError("non-finite total loss");
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at step " + std::to_string(s.step) +
                         (last_checkpoint_.empty()
                              ? std::string(" (no checkpoint yet)")
                              : "; last good checkpoint: " + last_checkpoint_));
    }

    optimizer_->zero_grad();
    backward(total);
    optimizer_->clip_grad_norm(cfg_.clip_norm);
    optimizer_->step(s.lr);
    ++step_;
    s.alpha = model_->alpha();
    return s;
  }

  // -- checkpoints ---------------------------------------------------------

  NamedTensorFile<T> checkpoint() const {
    NamedTensorFile<T> f;
    const auto params = model_->parameters();
    nlohmann::json names = nlohmann::json::array();
    for (const auto& [name, p] : params) {
      f.tensors.emplace_back(name, p.value());
      names.push_back(name);
    }
    for (std::size_t k = 0; k < optimizer_->params().size(); ++k) {
      const std::string& name = optimizer_->params()[k].first;
      f.tensors.emplace_back("adam.m." + name, optimizer_->first_moments()[k]);
      f.tensors.emplace_back("adam.v." + name, optimizer_->second_moments()[k]);
    }
    f.metadata = {
        {"step", step_},
        {"config", to_json(cfg_)},
        {"alpha", model_->alpha()},
        {"parameters", names},
        {"perceptual_taps", phi_->tap_names()},
        {"rng", {{"seed", cfg_.seed}, {"next_step", step_}}},
        {"optimizer", {{"type", "adam"}, {"steps", optimizer_->steps()}}},
    };
    return f;
  }

  std::string save_checkpoint(const std::filesystem::path& dir) {
    checkpoint().save(dir);
    last_checkpoint_ = dir.string();
    return last_checkpoint_;
  }

  /// Rebuilds a trainer (model, optimizer state and step) from a checkpoint.
  static Trainer from_checkpoint(const std::filesystem::path& dir) {
    const auto f = NamedTensorFile<T>::load(dir);
    Trainer t(config_from_json(f.metadata.at("config")));
    t.restore(f);
    t.last_checkpoint_ = dir.string();
    return t;
  }

  void restore(const NamedTensorFile<T>& f) {
    restore_parameters(f, model_->parameters());
    for (std::size_t k = 0; k < optimizer_->params().size(); ++k) {
      const std::string& name = optimizer_->params()[k].first;
      if (const auto* m = f.find("adam.m." + name)) optimizer_->first_moments()[k] = *m;
      if (const auto* v = f.find("adam.v." + name)) optimizer_->second_moments()[k] = *v;
    }
    const auto& meta = f.metadata;
    step_ = meta.value("step", 0L);
    optimizer_->set_steps(meta.contains("optimizer") ? meta["optimizer"].value("steps", step_) : step_);
  }

  // -- full run ------------------------------------------------------------

  /// Runs the remaining updates up to total_steps on `samples`, writing a
  /// checkpoint every checkpoint_every steps and at the end, and appending
  /// one metrics line per step to `metrics_log` when given. Returns the
  /// manifest of the final checkpoint.
  nlohmann::json fit(const std::vector<PairedSample<T>>& samples,
                     const std::filesystem::path& run_dir, std::ostream* metrics_log = nullptr,
                     const std::function<void(const StepStats&)>& on_step = {}) {
    BatchSampler<T> sampler(samples, cfg_.batch_size, cfg_.patch, cfg_.seed, cfg_.flip_augment);
    BatchPrefetcher<T> prefetch(sampler, step_, cfg_.total_steps);
    std::string final_dir;
    while (step_ < cfg_.total_steps) {
      const Batch<T> batch = prefetch.pop();
      const StepStats s = train_step(batch);
      if (metrics_log) *metrics_log << format_metrics_line(s) << '\n' << std::flush;
      if (on_step) on_step(s);
      if (step_ % cfg_.checkpoint_every == 0 || step_ == cfg_.total_steps)
        final_dir = save_checkpoint(checkpoint_dir(run_dir, step_));
    }
    if (final_dir.empty()) final_dir = save_checkpoint(checkpoint_dir(run_dir, step_));
    return checkpoint().manifest();
  }

 private:
  void build_optimizer() {
    nn::NamedParams<T> trainable;
    for (auto& np : model_->parameters())
      if (cfg_.ablation.learnable_alpha || np.first != "gac.alpha") trainable.push_back(np);
    optimizer_ = std::make_unique<Adam<T>>(
        std::move(trainable), AdamOptions{cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps});
  }

  TrainConfig cfg_;
  std::unique_ptr<Enhancer<T>> model_;
  std::unique_ptr<FeatureExtractor<T>> phi_;
  std::unique_ptr<Adam<T>> optimizer_;
  long step_ = 0;
  std::string last_checkpoint_;
};

}  // namespace uwe
