// Copyright 2026 The Strada Authors. All Rights Reserved.
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

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "strada/error.hpp"

namespace strada {

// Pixel tallies with lane as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

inline ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) {
    throw ShapeError("confusion: prediction has " + std::to_string(pred.size()) + " pixels, ground truth " +
                     std::to_string(gt.size()));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] > 1 || gt[i] > 1) throw ShapeError("confusion: masks must be binary (0/1)");
    if (pred[i]) {
      gt[i] ? ++c.tp : ++c.fp;
    } else {
      gt[i] ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

// A ratio whose denominator may vanish; `value` is 0 when undefined.
struct Score {
  double value = 0.0;
  bool defined = true;
};

inline Score accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) return {0.0, false};
  return {static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()), true};
}

inline Score precision(const ConfusionCounts& c) {
  if (c.tp + c.fp == 0) return {0.0, false};
  return {static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp), true};
}

inline Score recall(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) return {0.0, false};
  return {static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn), true};
}

inline Score f1_from(double p, double r) {
  if (p + r == 0.0) return {0.0, false};
  return {2.0 * p * r / (p + r), true};
}

inline Score f1(const ConfusionCounts& c) { return f1_from(precision(c).value, recall(c).value); }

struct ImageAp {
  double ap = 0.0;
  bool without_lanes = false;
};

// Threshold-swept average precision of one image. Thresholds descend
// t_q = 1 - q/V for q = 1..V; a pixel is positive when prob > t_q. The sweep
// starts at (precision, recall) = (1, 0) and sums P_q * (R_q - R_{q-1}).
// An image with no lane pixels scores 1 when nothing is ever predicted
// positive and 0 otherwise.
template <typename P>
ImageAp average_precision_image(std::span<const P> prob, std::span<const std::uint8_t> gt,
                                std::size_t samples = 100) {
  if (prob.size() != gt.size()) throw ShapeError("average_precision: extent mismatch");
  if (samples == 0) throw ConfigError("average_precision: V must be >= 1");
  std::vector<std::pair<double, std::uint8_t>> pixels(prob.size());
  std::uint64_t positives = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double p = static_cast<double>(prob[i]);
    if (!(p >= 0.0 && p <= 1.0)) throw ShapeError("average_precision: probabilities must lie in [0,1]");
    if (gt[i] > 1) throw ShapeError("average_precision: ground truth must be binary");
    pixels[i] = {p, gt[i]};
    positives += gt[i];
  }
  std::sort(pixels.begin(), pixels.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  if (positives == 0) {
    const double lowest = 1.0 - static_cast<double>(samples) / static_cast<double>(samples);
    const bool none = pixels.empty() || !(pixels.front().first > lowest);
    return {none ? 1.0 : 0.0, true};
  }

  std::size_t cursor = 0;
  std::uint64_t tp = 0, fp = 0;
  double prev_recall = 0.0, ap = 0.0;
  for (std::size_t q = 1; q <= samples; ++q) {
    const double threshold = 1.0 - static_cast<double>(q) / static_cast<double>(samples);
    while (cursor < pixels.size() && pixels[cursor].first > threshold) {
      pixels[cursor].second ? ++tp : ++fp;
      ++cursor;
    }
    const double p = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = static_cast<double>(tp) / static_cast<double>(positives);
    ap += p * (r - prev_recall);
    prev_recall = r;
  }
  return {ap, false};
}

struct MetricReport {
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0, ap = 0.0;
  ConfusionCounts counts;
  std::size_t images = 0;
  // Diagnostics: scores reported as 0 because a denominator vanished, and
  // images that carried no lane pixels (their AP follows the empty rule).
  bool precision_undefined = false, recall_undefined = false, f1_undefined = false;
  std::size_t images_without_lanes = 0;
};

enum class Averaging { kMicro, kMacro };

// Accumulates per-image results into a dataset report.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::size_t ap_samples = 100, Averaging averaging = Averaging::kMicro)
      : samples_(ap_samples), averaging_(averaging) {}

  // `lane_prob` is the per-pixel lane probability; the hard mask is `pred`.
  template <typename P>
  void add(std::span<const std::uint8_t> pred, std::span<const P> lane_prob, std::span<const std::uint8_t> gt) {
    const ConfusionCounts c = confusion(pred, gt);
    counts_ += c;
    per_image_.push_back(c);
    const ImageAp ap = average_precision_image(lane_prob, gt, samples_);
    ap_sum_ += ap.ap;
    if (ap.without_lanes) ++without_lanes_;
  }

  MetricReport report() const {
    if (per_image_.empty()) throw ConfigError("evaluate: empty dataset");
    MetricReport r;
    r.counts = counts_;
    r.images = per_image_.size();
    r.images_without_lanes = without_lanes_;
    r.ap = ap_sum_ / static_cast<double>(per_image_.size());
    if (averaging_ == Averaging::kMicro) {
      const Score a = strada::accuracy(counts_), p = strada::precision(counts_), rc = strada::recall(counts_);
      const Score f = f1_from(p.value, rc.value);
      r.accuracy = a.value;
      r.precision = p.value;
      r.recall = rc.value;
      r.f1 = f.value;
      r.precision_undefined = !p.defined;
      r.recall_undefined = !rc.defined;
      r.f1_undefined = !f.defined;
    } else {
      double a = 0, p = 0, rc = 0;
      for (const auto& c : per_image_) {
        a += strada::accuracy(c).value;
        const Score ps = strada::precision(c), rs = strada::recall(c);
        p += ps.value;
        rc += rs.value;
        r.precision_undefined |= !ps.defined;
        r.recall_undefined |= !rs.defined;
      }
      const double n = static_cast<double>(per_image_.size());
      r.accuracy = a / n;
      r.precision = p / n;
      r.recall = rc / n;
      const Score f = f1_from(r.precision, r.recall);
      r.f1 = f.value;
      r.f1_undefined = !f.defined;
    }
    return r;
  }

 private:
  std::size_t samples_;
  Averaging averaging_;
  ConfusionCounts counts_;
  std::vector<ConfusionCounts> per_image_;
  double ap_sum_ = 0.0;
  std::size_t without_lanes_ = 0;
};

inline nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["ap"] = r.ap;
  j["tp"] = r.counts.tp;
  j["tn"] = r.counts.tn;
  j["fp"] = r.counts.fp;
  j["fn"] = r.counts.fn;
  j["images"] = r.images;
  return j;
}

inline std::string format_table(const MetricReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%-10s %10s\n%-10s %10.4f\n%-10s %10.4f\n%-10s %10.4f\n%-10s %10.4f\n%-10s %10.4f\n"
                "%-10s %10llu\n%-10s %10llu\n%-10s %10llu\n%-10s %10llu\n%-10s %10zu\n",
                "metric", "value", "accuracy", r.accuracy, "precision", r.precision, "recall", r.recall,
                "f1", r.f1, "ap", r.ap, "tp", static_cast<unsigned long long>(r.counts.tp), "tn",
                static_cast<unsigned long long>(r.counts.tn), "fp",
                static_cast<unsigned long long>(r.counts.fp), "fn",
                static_cast<unsigned long long>(r.counts.fn), "images", r.images);
  std::string out = buf;
  if (r.precision_undefined) out += "note: precision undefined (no positive predictions), reported as 0\n";
  if (r.recall_undefined) out += "note: recall undefined (no lane pixels), reported as 0\n";
  if (r.images_without_lanes > 0) {
    out += "note: " + std::to_string(r.images_without_lanes) + " image(s) without lane pixels\n";
  }
  return out;
}

}  // namespace strada
