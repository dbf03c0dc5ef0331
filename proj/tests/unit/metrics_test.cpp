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

#include <gtest/gtest.h>

#include <cstdio>

#include "strada/data/synthetic.hpp"
#include "strada/evaluate.hpp"
#include "strada/metrics.hpp"
#include "test_util.hpp"

namespace strada {
namespace {

using Mask = std::vector<std::uint8_t>;
std::span<const std::uint8_t> s(const Mask& m) { return m; }

std::string fixed(double v, int places) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

TEST(Confusion, Examples) {
  const Mask gt{1, 0, 1, 1, 0, 0};
  const auto perfect = confusion(s(gt), s(gt));
  EXPECT_EQ(perfect.fp, 0u);
  EXPECT_EQ(perfect.fn, 0u);
  const auto none = confusion(s(Mask(6, 0)), s(gt));
  EXPECT_EQ(none.fn, 3u);
  EXPECT_EQ(none.tp, 0u);
  const auto c = confusion(s(Mask{1, 1, 0, 0}), s(Mask{1, 0, 0, 0}));
  EXPECT_EQ(c, (ConfusionCounts{1, 2, 1, 0}));
  EXPECT_EQ(c.total(), 4u);
}

TEST(Confusion, Errors) {
  EXPECT_THROW(confusion(s(Mask{1}), s(Mask{1, 0})), ShapeError);
  EXPECT_THROW(confusion(s(Mask{2}), s(Mask{1})), ShapeError);
}

TEST(Scores, HandArithmetic) {
  const ConfusionCounts c{1, 2, 1, 0};
  EXPECT_DOUBLE_EQ(accuracy(c).value, 0.75);
  EXPECT_DOUBLE_EQ(precision(c).value, 0.5);
  EXPECT_DOUBLE_EQ(recall(c).value, 1.0);
  EXPECT_DOUBLE_EQ(f1(c).value, 2.0 / 3.0);
}

TEST(Scores, PublishedF1FromPrecisionRecall) {
  EXPECT_EQ(fixed(f1_from(0.8750, 0.9531).value, 4), "0.9124");
  // Three-place inputs are themselves rounded; the published F1 must be
  // reachable from some precision/recall inside the rounding box.
  const double lo = f1_from(0.8465, 0.8945).value, hi = f1_from(0.8475, 0.8955).value;
  EXPECT_LE(fixed(lo, 3), "0.871");
  EXPECT_GE(fixed(hi, 3), "0.871");
  EXPECT_EQ(fixed(f1_from(0.847, 0.895).value, 3), "0.870");
}

TEST(Scores, UndefinedDenominatorsAreZeroAndFlagged) {
  const ConfusionCounts no_pred{0, 5, 0, 3};
  EXPECT_FALSE(precision(no_pred).defined);
  EXPECT_EQ(precision(no_pred).value, 0.0);
  const ConfusionCounts no_gt{0, 5, 2, 0};
  EXPECT_FALSE(recall(no_gt).defined);
  EXPECT_FALSE(f1_from(0, 0).defined);
}

TEST(Scores, F1LiesBetweenPrecisionAndRecall) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const ConfusionCounts c{rng() % 50 + 1, rng() % 50, rng() % 50, rng() % 50};
    const double p = precision(c).value, r = recall(c).value, f = f1(c).value;
    EXPECT_GE(f, std::min(p, r) - 1e-15);
    EXPECT_LE(f, std::max(p, r) + 1e-15);
  }
}

// Exhaustive sweep: every threshold recounts all pixels from scratch.
struct SweepResult {
  double ap;
  std::vector<double> recalls;
};

SweepResult exhaustive_ap(const std::vector<double>& prob, const Mask& gt, std::size_t v) {
  double positives = 0;
  for (auto g : gt) positives += g;
  double ap = 0, prev_r = 0;
  std::vector<double> recalls{0.0};
  for (std::size_t q = 1; q <= v; ++q) {
    const double tau = 1.0 - static_cast<double>(q) / static_cast<double>(v);
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      if (prob[i] > tau) (gt[i] ? tp : fp) += 1;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 1.0;
    const double r = tp / positives;
    ap += p * (r - prev_r);
    prev_r = r;
    recalls.push_back(r);
  }
  return {ap, recalls};
}

TEST(AveragePrecision, PerfectMapScoresOne) {
  const Mask gt{0, 1, 1, 0, 0, 1};
  const std::vector<double> prob(gt.begin(), gt.end());
  EXPECT_EQ(average_precision_image(std::span<const double>(prob), s(gt)).ap, 1.0);
}

TEST(AveragePrecision, ConstantHalfOnHalfLane) {
  const Mask gt{1, 1, 0, 0};
  const std::vector<double> prob(4, 0.5);
  EXPECT_DOUBLE_EQ(average_precision_image(std::span<const double>(prob), s(gt)).ap, 0.5);
  EXPECT_DOUBLE_EQ(exhaustive_ap(prob, gt, 100).ap, 0.5);
}

TEST(AveragePrecision, MatchesExhaustiveSweepOnRandomMaps) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> prob(64);
    Mask gt(64);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t i = 0; i < 64; ++i) {
      // Mix continuous values with values sitting exactly on thresholds.
      prob[i] = seed % 2 ? u(rng) : static_cast<double>(rng() % 101) / 100.0;
      gt[i] = u(rng) < 0.3;
    }
    gt[seed % 64] = 1;
    const auto oracle = exhaustive_ap(prob, gt, 100);
    const auto engine = average_precision_image(std::span<const double>(prob), s(gt));
    ASSERT_NEAR(engine.ap, oracle.ap, 1e-9) << "seed " << seed;
    EXPECT_GE(engine.ap, 0.0);
    EXPECT_LE(engine.ap, 1.0);
    for (std::size_t q = 1; q < oracle.recalls.size(); ++q) EXPECT_GE(oracle.recalls[q], oracle.recalls[q - 1]);
  }
}

TEST(AveragePrecision, ImagesWithoutLanes) {
  const Mask gt(4, 0);
  const std::vector<double> quiet{0, 0, 0, 0}, noisy{0, 0.3, 0, 0};
  const auto a = average_precision_image(std::span<const double>(quiet), s(gt));
  EXPECT_EQ(a.ap, 1.0);
  EXPECT_TRUE(a.without_lanes);
  EXPECT_EQ(average_precision_image(std::span<const double>(noisy), s(gt)).ap, 0.0);
}

TEST(AveragePrecision, Errors) {
  const Mask gt{1, 0};
  const std::vector<double> bad{1.5, 0}, ok{0.5, 0.5};
  EXPECT_THROW(average_precision_image(std::span<const double>(bad), s(gt)), ShapeError);
  EXPECT_THROW(average_precision_image(std::span<const double>(ok), s(gt), 0), ConfigError);
}

TEST(Accumulator, MicroAggregatesRawCounts) {
  MetricAccumulator acc;
  const Mask g1{1, 0, 0, 0}, p1{1, 1, 0, 0}, g2{1, 1, 1, 0}, p2{0, 1, 1, 0};
  const std::vector<double> q1{1, 1, 0, 0}, q2{0, 1, 1, 0};
  acc.add(s(p1), std::span<const double>(q1), s(g1));
  acc.add(s(p2), std::span<const double>(q2), s(g2));
  const auto r = acc.report();
  ConfusionCounts total = confusion(s(p1), s(g1));
  total += confusion(s(p2), s(g2));
  EXPECT_EQ(r.counts, total);
  EXPECT_DOUBLE_EQ(r.precision, precision(total).value);
  EXPECT_DOUBLE_EQ(r.recall, recall(total).value);
  EXPECT_DOUBLE_EQ(r.accuracy, accuracy(total).value);
  const double ap1 = average_precision_image(std::span<const double>(q1), s(g1)).ap;
  const double ap2 = average_precision_image(std::span<const double>(q2), s(g2)).ap;
  EXPECT_DOUBLE_EQ(r.ap, (ap1 + ap2) / 2);
  EXPECT_EQ(r.images, 2u);

  MetricAccumulator macro(100, Averaging::kMacro);
  macro.add(s(p1), std::span<const double>(q1), s(g1));
  macro.add(s(p2), std::span<const double>(q2), s(g2));
  EXPECT_DOUBLE_EQ(macro.report().precision, (0.5 + 1.0) / 2);
}

TEST(Accumulator, EmptyDatasetRejected) { EXPECT_THROW(MetricAccumulator{}.report(), ConfigError); }

TEST(Accumulator, PerfectPredictionsScoreOne) {
  MetricAccumulator acc;
  const Mask g{0, 1, 1, 0, 1, 0};
  const std::vector<double> q(g.begin(), g.end());
  acc.add(s(g), std::span<const double>(q), s(g));
  const auto r = acc.report();
  for (double v : {r.accuracy, r.precision, r.recall, r.f1, r.ap}) EXPECT_EQ(v, 1.0);
}

TEST(Report, JsonSchemaAndTable) {
  MetricAccumulator acc;
  const Mask g{0, 1}, p{1, 1};
  const std::vector<double> q{0.7, 0.9};
  acc.add(s(p), std::span<const double>(q), s(g));
  const auto j = to_json(acc.report());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"accuracy", "precision", "recall", "f1", "ap", "tp", "tn", "fp", "fn",
                                            "images"}));
  EXPECT_EQ(j["tp"], 1);
  EXPECT_EQ(j["fp"], 1);
  const auto table = format_table(acc.report());
  EXPECT_NE(table.find("precision      0.5000"), std::string::npos) << table;
}

TEST(Evaluate, ArgmaxMatchesHalfThresholdAndTiesGoToBackground) {
  Tensor<double> probs(Shape{1, 2, 1, 4}, std::vector<double>{0.9, 0.5, 0.2, 0.49, 0.1, 0.5, 0.8, 0.51});
  EXPECT_EQ(argmax_mask(probs, 0), (Mask{0, 0, 1, 1}));
  const auto lane = lane_probabilities(probs, 0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(argmax_mask(probs, 0)[i], lane[i] > 0.5 ? 1 : 0);
}

NetworkConfig tiny() {
  NetworkConfig c = NetworkConfig{}.with_width_divisor(8);
  c.height = 32;
  c.width = 64;
  c.frames = 2;
  return c;
}

std::vector<data::Clip> synthetic(std::size_t n) {
  std::vector<data::Clip> out;
  for (std::size_t i = 0; i < n; ++i) {
    data::SyntheticSpec spec;
    spec.height = 32;
    spec.width = 64;
    spec.frames = 2;
    spec.seed = 50 + i;
    out.push_back(data::generate_synthetic(spec).clip);
  }
  return out;
}

TEST(Evaluate, UntrainedNetworkReportIsWellFormed) {
  auto net = LaneNet<float>::build(tiny());
  const auto r = evaluate_dataset(net, synthetic(3));
  for (double v : {r.accuracy, r.precision, r.recall, r.f1, r.ap}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(r.counts.total(), 3u * 32 * 64);
  EXPECT_THROW(evaluate_dataset(net, {}), ConfigError);
}

TEST(Evaluate, DatasetOfOneAndTwoMatchPerImageRecombination) {
  auto net = LaneNet<float>::build(tiny());
  const auto clips = synthetic(2);
  std::vector<Mask> preds;
  const auto both = evaluate_dataset(net, clips, {}, [&](const data::Clip&, const Mask& m) { preds.push_back(m); });
  ConfusionCounts total;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto single = evaluate_dataset(net, {clips[i]});
    const auto c = confusion(s(preds[i]), s(clips[i].label));
    EXPECT_EQ(single.counts, c);
    EXPECT_DOUBLE_EQ(single.f1, f1(c).value);
    total += c;
  }
  EXPECT_EQ(both.counts, total);
  EXPECT_DOUBLE_EQ(both.precision, precision(total).value);
  EXPECT_EQ(evaluate_dataset(net, clips).counts, both.counts);
}

}  // namespace
}  // namespace strada
