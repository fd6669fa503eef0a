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


// Command-line front end: train, enhance, eval, swap, gradmap.
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error,
// 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uwe/uwe.hpp"

namespace fs = std::filesystem;
using Real = float;

namespace {

struct Options {
  std::string config;
  std::string checkpoint;
  std::string input;
  std::string label;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> ablate;
  std::string lambda_formula;
  std::string image_a;
  std::string image_b;
};

void log_file_error(const fs::path& path, const std::exception& e) {
  std::cerr << "error: " << path.string() << ": " << e.what() << '\n';
}

int file_error_code(const std::exception& e) {
  if (const auto* ue = dynamic_cast<const uwe::Error*>(&e)) return ue->exit_code();
  return 2;
}

int cmd_train(const Options& o) {
  uwe::TrainConfig cfg;
  if (!o.config.empty()) cfg = uwe::load_config(o.config);
  if (!o.input.empty()) cfg.input_dir = o.input;
  if (!o.label.empty()) cfg.label_dir = o.label;
  if (!o.output.empty()) cfg.run_dir = o.output;
  if (o.seed) cfg.seed = *o.seed;
  for (const auto& a : o.ablate) uwe::apply_ablation(cfg.ablation, a);
  if (!o.lambda_formula.empty()) cfg.lambda_formula = uwe::parse_lambda_formula(o.lambda_formula);
  cfg.validate();
  if (cfg.input_dir.empty() || cfg.label_dir.empty())
    throw uwe::ConfigError("config field 'input_dir'/'label_dir': dataset directories are required");

  auto ds = uwe::load_paired_dataset<Real>(cfg.input_dir, cfg.label_dir);
  for (const auto& s : ds.skipped) std::cerr << "warning: no partner for '" << s << "', skipped\n";
  std::vector<uwe::PairedSample<Real>> train = std::move(ds.samples), test;
  if (cfg.train_count > 0) std::tie(train, test) = uwe::split(train, {cfg.train_count, cfg.seed});

  const fs::path run = cfg.run_dir;
  fs::create_directories(run);
  uwe::write_split_manifest(run / "train_split.txt", train);
  uwe::write_split_manifest(run / "test_split.txt", test);

  std::optional<uwe::Trainer<Real>> trainer;
  if (!o.checkpoint.empty()) {
    trainer.emplace(uwe::Trainer<Real>::from_checkpoint(o.checkpoint));
    std::cout << "resuming from " << o.checkpoint << " at step " << trainer->step() << '\n';
  } else {
    trainer.emplace(cfg);
  }
  std::ofstream(run / "config.json") << uwe::to_json(trainer->config()).dump(2) << '\n';

  const fs::path log_path = run / "metrics.tsv";
  const bool fresh = o.checkpoint.empty() || !fs::exists(log_path);
  std::ofstream log(log_path, fresh ? std::ios::trunc : std::ios::app);
  if (fresh) log << uwe::kMetricsHeader << '\n';

  const long report_every = std::max(1L, trainer->config().total_steps / 20);
  trainer->fit(train, run, &log, [&](const uwe::StepStats& s) {
    if (s.step % report_every == 0 || s.step == trainer->config().total_steps)
      std::printf("step %ld  L_total %.6g  lambda %.4g  alpha %.4g\n", s.step, s.l_total, s.lambda,
                  s.alpha);
  });
  std::cout << "checkpoint: " << trainer->last_checkpoint() << '\n';
  return 0;
}

int cmd_enhance(const Options& o) {
  const auto model = uwe::load_enhancer<Real>(o.checkpoint);
  int status = 0;
  int done = 0;
  for (const auto& [stem, path] : uwe::images_by_stem(o.input)) {
    try {
      const auto out = uwe::enhance_image(*model, uwe::io::read_image<Real>(path));
      uwe::io::write_image(fs::path(o.output) / (stem + ".png"), out);
      ++done;
    } catch (const std::exception& e) {
      log_file_error(path, e);
      if (!status) status = file_error_code(e);
    }
  }
  std::cout << "enhanced " << done << " image(s) into " << o.output << '\n';
  return status;
}

int cmd_eval(const Options& o) {
  const auto model = uwe::load_enhancer<Real>(o.checkpoint);
  const auto inputs = uwe::images_by_stem(o.input);
  const auto labels = uwe::images_by_stem(o.label);
  uwe::MetricReport report;
  int status = 0;
  for (const auto& [stem, path] : inputs) {
    const auto it = labels.find(stem);
    if (it == labels.end()) {
      std::cerr << "warning: no label for '" << path.string() << "', skipped\n";
      continue;
    }
    try {
      const auto label = uwe::io::read_image<Real>(it->second);
      const auto out = uwe::enhance_image(*model, uwe::io::read_image<Real>(path));
      uwe::require_same_shape(out, label, "eval");
      report.add({stem, uwe::psnr(out, label), uwe::ssim(out, label)});
    } catch (const std::exception& e) {
      log_file_error(path, e);
      if (!status) status = file_error_code(e);
    }
  }
  if (report.entries.empty() && !status)
    throw uwe::DataError("no matching stems between '" + o.input + "' and '" + o.label + "'");

  std::string tsv = "id\tpsnr\tssim\n";
  char buf[256];
  for (const auto& e : report.entries) {
    std::snprintf(buf, sizeof buf, "%s\t%.4f\t%.6f\n", e.id.c_str(), e.psnr, e.ssim);
    tsv += buf;
  }
  std::snprintf(buf, sizeof buf, "mean\t%.4f\t%.6f\n", report.mean_psnr, report.mean_ssim);
  tsv += buf;
  std::cout << tsv;
  if (!o.output.empty()) {
    const fs::path out = o.output;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream(out) << tsv;
  }
  return status;
}

int cmd_swap(const Options& o) {
  const auto a = uwe::io::read_image<double>(o.image_a);
  auto b = uwe::io::read_image<double>(o.image_b);
  if (b.shape() != a.shape()) {
    std::cerr << "warning: resizing '" << o.image_b << "' from " << b.shape().str() << " to "
              << a.shape().str() << '\n';
    b = uwe::io::resize_bilinear(b, a.shape().h, a.shape().w);
  }
  const auto [amp_b_phase_a, amp_a_phase_b] = uwe::swap_amplitude(a, b);
  const fs::path out = o.output;
  const std::string sa = fs::path(o.image_a).stem().string();
  const std::string sb = fs::path(o.image_b).stem().string();
  uwe::io::write_image(out / ("amp_" + sb + "_phase_" + sa + ".png"), amp_b_phase_a);
  uwe::io::write_image(out / ("amp_" + sa + "_phase_" + sb + ".png"), amp_a_phase_b);
  return 0;
}

int cmd_gradmap(const Options& o) {
  const auto image = uwe::io::read_image<Real>(o.image_a);
  const fs::path out = o.output;
  const std::string stem = fs::path(o.image_a).stem().string();
  uwe::io::write_image(out / (stem + "_sobel.png"), uwe::sobel_gradient(image));
  if (!o.checkpoint.empty()) {
    const auto model = uwe::load_enhancer<Real>(o.checkpoint);
    uwe::io::write_image(out / (stem + "_g_s1.png"), uwe::stage1_maps(*model, image).second);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage underwater image enhancement"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "train a model on a paired dataset");
  train->add_option("--config", o.config, "JSON configuration file");
  train->add_option("--input", o.input, "directory of degraded images");
  train->add_option("--label", o.label, "directory of reference images");
  train->add_option("--output", o.output, "run directory for checkpoints and logs");
  train->add_option("--checkpoint", o.checkpoint, "checkpoint to resume from");
  train->add_option("--seed", o.seed, "random seed");
  train->add_option("--ablate", o.ablate, "disable a component")
      ->check(CLI::IsMember({"no-sfi", "no-cl", "no-ls1", "no-lg", "fixed-alpha"}));
  train->add_option("--lambda-formula", o.lambda_formula, "curriculum schedule variant")
      ->check(CLI::IsMember({"continuous", "paper-literal"}));

  auto* enhance = app.add_subcommand("enhance", "enhance every image of a directory");
  enhance->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  enhance->add_option("--input", o.input, "input image directory")->required();
  enhance->add_option("--output", o.output, "output image directory")->required();

  auto* eval = app.add_subcommand("eval", "enhance and score against references");
  eval->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  eval->add_option("--input", o.input, "degraded image directory")->required();
  eval->add_option("--label", o.label, "reference image directory")->required();
  eval->add_option("--output", o.output, "path of the tab-separated report");

  auto* swap = app.add_subcommand("swap", "exchange the Fourier amplitudes of two images");
  swap->add_option("a", o.image_a, "first image (phase donor of the first output)")->required();
  swap->add_option("b", o.image_b, "second image (amplitude donor of the first output)")->required();
  swap->add_option("--output", o.output, "output directory")->required();

  auto* gradmap = app.add_subcommand("gradmap", "write the normalized Sobel gradient map");
  gradmap->add_option("image", o.image_a, "input image")->required();
  gradmap->add_option("--output", o.output, "output directory")->required();
  gradmap->add_option("--checkpoint", o.checkpoint, "also write the refined stage-1 gradient map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) return cmd_train(o);
    if (*enhance) return cmd_enhance(o);
    if (*eval) return cmd_eval(o);
    if (*swap) return cmd_swap(o);
    if (*gradmap) return cmd_gradmap(o);
  } catch (const uwe::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
