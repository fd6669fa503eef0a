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

// Paired (degraded, reference) datasets: loading by filename stem, seeded
// splits, patch sampling and per-step batch assembly.

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "uwe/errors.hpp"
#include "uwe/image_io.hpp"
#include "uwe/tensor.hpp"

namespace uwe {

template <typename T>
struct PairedSample {
  Tensor<T> input;  // (1,3,H,W)
  Tensor<T> label;  // (1,3,H,W)
  std::string id;   // filename stem
};

template <typename T>
struct PairedDataset {
  std::vector<PairedSample<T>> samples;  // sorted by id
  std::vector<std::string> skipped;      // files without a partner
};

/// Image files (png, jpg) of `dir` keyed by filename stem.
inline std::map<std::string, std::filesystem::path> images_by_stem(
    const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("directory not found: '" + dir.string() + "'");
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && io::is_image_file(entry.path()))
      out.emplace(entry.path().stem().string(), entry.path());
  return out;
}

/// Pairs files of `input_dir` and `label_dir` with identical stems.
template <typename T>
PairedDataset<T> load_paired_dataset(const std::filesystem::path& input_dir,
                                     const std::filesystem::path& label_dir) {
  const auto inputs = images_by_stem(input_dir);
  const auto labels = images_by_stem(label_dir);
  PairedDataset<T> ds;
  for (const auto& [stem, path] : inputs) {
    auto it = labels.find(stem);
    if (it == labels.end()) {
      ds.skipped.push_back(path.string());
      continue;
    }
    PairedSample<T> s{io::read_image<T>(path), io::read_image<T>(it->second), stem};
    if (s.input.shape() != s.label.shape())
      throw DataError("size mismatch between '" + path.string() + "' and '" +
                      it->second.string() + "'");
    ds.samples.push_back(std::move(s));
  }
  for (const auto& [stem, path] : labels)
    if (!inputs.count(stem)) ds.skipped.push_back(path.string());
  if (ds.samples.empty())
    throw DataError("empty dataset: no matching stems between '" + input_dir.string() + "' and '" +
                    label_dir.string() + "'");
  return ds;
}

struct SplitSpec {
  int train_count = 0;
  std::uint64_t seed = 0;
};

/// Seeded Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  return idx;
}

/// Seeded shuffle followed by a prefix split into (train, test).
template <typename Item>
std::pair<std::vector<Item>, std::vector<Item>> split(const std::vector<Item>& items,
                                                      const SplitSpec& spec) {
  if (spec.train_count <= 0 || static_cast<std::size_t>(spec.train_count) >= items.size())
    throw InvalidInput("split: train_count must lie in (0, " + std::to_string(items.size()) + ")");
  const auto perm = seeded_permutation(items.size(), spec.seed);
  std::pair<std::vector<Item>, std::vector<Item>> out;
  for (std::size_t i = 0; i < perm.size(); ++i)
    (i < static_cast<std::size_t>(spec.train_count) ? out.first : out.second)
        .push_back(items[perm[i]]);
  return out;
}

template <typename T>
void write_split_manifest(const std::filesystem::path& path,
                          const std::vector<PairedSample<T>>& samples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  for (const auto& s : samples) out << s.id << '\n';
  if (!out) throw DataError("cannot write split manifest '" + path.string() + "'");
}

template <typename T>
Tensor<T> crop(const Tensor<T>& t, int y0, int x0, int h, int w) {
  const Shape& s = t.shape();
  Tensor<T> out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < h; ++y)
        std::copy_n(&t.at(n, c, y0 + y, x0), w, &out.at(n, c, y, 0));
  return out;
}

template <typename T>
Tensor<T> flip_horizontal(const Tensor<T>& t) {
  const Shape& s = t.shape();
  Tensor<T> out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) out.at(n, c, y, x) = t.at(n, c, y, s.w - 1 - x);
  return out;
}

/// Square crop of `size` at the same offsets in input and label. Images
/// smaller than the patch are bilinearly resized up to it instead.
template <typename T, typename Rng>
PairedSample<T> random_patch(const PairedSample<T>& sample, int size, Rng& rng) {
  const Shape& s = sample.input.shape();
  if (size < 1) throw InvalidInput("random_patch: size must be positive");
  if (size > s.h || size > s.w) {
    std::cerr << "warning: image '" << sample.id << "' (" << s.h << "x" << s.w
              << ") is smaller than the " << size << "px patch; resizing\n";
    return {io::resize_bilinear(sample.input, size, size),
            io::resize_bilinear(sample.label, size, size), sample.id};
  }
  const int y0 = static_cast<int>(rng() % static_cast<std::uint64_t>(s.h - size + 1));
  const int x0 = static_cast<int>(rng() % static_cast<std::uint64_t>(s.w - size + 1));
  return {crop(sample.input, y0, x0, size, size), crop(sample.label, y0, x0, size, size),
          sample.id};
}

template <typename T>
struct Batch {
  Tensor<T> input;  // (B,3,P,P)
  Tensor<T> label;  // (B,3,P,P)
  std::vector<std::string> ids;
};

/// Stacks (1,C,H,W) tensors along the batch axis.
template <typename T>
Tensor<T> stack(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw InvalidInput("stack: no tensors");
  Shape s = parts[0].shape();
  s.n = static_cast<int>(parts.size());
  Tensor<T> out(s);
  const std::size_t per = parts[0].size();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].shape() != parts[0].shape()) throw InvalidInput("stack: shape mismatch");
    std::copy_n(parts[i].data(), per, out.data() + i * per);
  }
  return out;
}

/// Deterministic batch assembly: the batch of step s depends only on
/// (seed, s), so any worker can build it and a resumed run sees the same
/// data. Sample order follows a fresh seeded permutation every epoch.
template <typename T>
class BatchSampler {
 public:
  BatchSampler(const std::vector<PairedSample<T>>& samples, int batch_size, int patch,
               std::uint64_t seed, bool flip = false)
      : samples_(&samples), batch_(batch_size), patch_(patch), seed_(seed), flip_(flip) {
    if (samples.empty()) throw DataError("BatchSampler: empty dataset");
  }

  /// Batch for 0-based step index `step`.
  Batch<T> batch(long step) const {
    const std::size_t n = samples_->size();
    std::vector<Tensor<T>> in, lab;
    Batch<T> b;
    for (int j = 0; j < batch_; ++j) {
      const std::uint64_t g = static_cast<std::uint64_t>(step) * batch_ + j;
      const auto perm = seeded_permutation(n, mix(seed_, 0x9e37'79b9ULL, g / n));
      const auto& sample = (*samples_)[perm[g % n]];
      std::mt19937_64 rng(mix(seed_, static_cast<std::uint64_t>(step), j));
      PairedSample<T> p = random_patch(sample, patch_, rng);
      if (flip_ && (rng() & 1)) {
        p.input = flip_horizontal(p.input);
        p.label = flip_horizontal(p.label);
      }
      in.push_back(std::move(p.input));
      lab.push_back(std::move(p.label));
      b.ids.push_back(sample.id);
    }
    b.input = stack(in);
    b.label = stack(lab);
    return b;
  }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  }

  const std::vector<PairedSample<T>>* samples_;
  int batch_;
  int patch_;
  std::uint64_t seed_;
  bool flip_;
};

/// Single background worker filling a bounded queue with the batches of
/// steps [first, last). Batches come out in step order.
template <typename T>
class BatchPrefetcher {
 public:
  BatchPrefetcher(const BatchSampler<T>& sampler, long first, long last, std::size_t capacity = 2)
      : sampler_(sampler), next_(first), last_(last), capacity_(capacity) {
    worker_ = std::thread([this] { run(); });
  }
  ~BatchPrefetcher() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }
  BatchPrefetcher(const BatchPrefetcher&) = delete;
  BatchPrefetcher& operator=(const BatchPrefetcher&) = delete;

  Batch<T> pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return !queue_.empty() || error_; });
    if (queue_.empty()) std::rethrow_exception(error_);
    Batch<T> b = std::move(queue_.front());
    queue_.pop_front();
    cv_.notify_all();
    return b;
  }

 private:
  void run() {
    try {
      for (long s = next_; s < last_; ++s) {
        Batch<T> b = sampler_.batch(s);
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return queue_.size() < capacity_ || stop_; });
        if (stop_) return;
        queue_.push_back(std::move(b));
        cv_.notify_all();
      }
    } catch (...) {
      std::lock_guard lock(mu_);
      error_ = std::current_exception();
      cv_.notify_all();
    }
  }

  const BatchSampler<T>& sampler_;
  long next_;
  long last_;
  std::size_t capacity_;
  std::deque<Batch<T>> queue_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::exception_ptr error_;
  std::thread worker_;
};

}  // namespace uwe
