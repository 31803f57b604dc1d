// Copyright 2026 The c3kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstring>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "c3/error.h"
#include "c3/metrics.h"
#include "c3/util.h"
#include "test_util.h"

namespace c3 {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

PredictionSet RandomPredictions(std::mt19937_64& rng, size_t n, bool confidences) {
  PredictionSet set;
  set.scene_id = "scene_" + std::to_string(rng() % 100);
  set.plan_id = "plan";
  set.image_id = static_cast<uint32_t>(rng());
  std::uniform_real_distribution<double> u(-2, 700);
  for (size_t i = 0; i < n; ++i) {
    PredictionEntry e;
    e.query = {u(rng), u(rng)};
    e.plan_norm = {u(rng) / 700, std::ldexp(u(rng), -40)};
    if (confidences || i % 3 == 0) e.confidence = u(rng) / 700;
    set.entries.push_back(e);
  }
  return set;
}

TEST(PredictionText, RoundTripIsExact) {
  std::mt19937_64 rng(90);
  for (bool conf : {false, true}) {
    const PredictionSet set = RandomPredictions(rng, 300, conf);
    EXPECT_EQ(ParsePredictionText(FormatPredictionText(set)), set);
  }
}

TEST(PredictionText, Layout) {
  PredictionSet set;
  set.scene_id = "s";
  set.plan_id = "p";
  set.image_id = 7;
  set.entries = {{{1, 2}, {0.5, 0.25}, 0.75}, {{3, 4}, {0.125, 1}, {}}};
  EXPECT_EQ(FormatPredictionText(set), "C3P 1 s p 7\n1 2 0.5 0.25 0.75\n3 4 0.125 1\n");
  EXPECT_EQ(ParsePredictionText("# comment\n\nC3P 1 s p 7\n  1 2 0.5 0.25 0.75\n3 4 0.125 1"), set);
  EXPECT_EQ(CodeOf([] { ParsePredictionText("C3P 2 s p 7\n"); }), ErrorCode::kVersionMismatch);
  EXPECT_EQ(CodeOf([] { ParsePredictionText("C3P 1 s p 7\n1 2 x 4\n"); }), ErrorCode::kMalformedText);
  EXPECT_EQ(CodeOf([] { ParsePredictionText("C3P 1 s p 7\n1 2 3\n"); }), ErrorCode::kMalformedText);
  EXPECT_EQ(CodeOf([] { ParsePredictionText(""); }), ErrorCode::kMalformedText);
}

TEST(PredictionBinary, RoundTripAndCorruption) {
  std::mt19937_64 rng(91);
  const PredictionSet set = RandomPredictions(rng, 200, false);
  std::vector<uint8_t> bytes = EncodePredictionBinary(set);
  EXPECT_EQ(DecodePredictionBinary(bytes), set);
  uint32_t crc;
  std::memcpy(&crc, bytes.data() + bytes.size() - 4, 4);
  EXPECT_EQ(crc, Crc32(std::span(bytes).first(bytes.size() - 4)));

  for (size_t offset : {size_t{20}, bytes.size() / 2, bytes.size() - 5}) {
    std::vector<uint8_t> bad = bytes;
    bad[offset] ^= 0x01;
    EXPECT_EQ(CodeOf([&] { DecodePredictionBinary(bad); }), ErrorCode::kChecksumFailure) << offset;
  }
  EXPECT_EQ(CodeOf([&] { DecodePredictionBinary(std::span(bytes).first(bytes.size() - 1)); }),
            ErrorCode::kChecksumFailure);
  std::vector<uint8_t> future = bytes;
  future[4] = 2;
  EXPECT_EQ(CodeOf([&] { DecodePredictionBinary(future); }), ErrorCode::kVersionMismatch);
}

TEST(PredictionFiles, PathsAndPreference) {
  testing::TempDir dir;
  std::mt19937_64 rng(92);
  PredictionSet set = RandomPredictions(rng, 10, true);
  const PairKey key{set.scene_id, set.plan_id, set.image_id};
  EXPECT_EQ(PredictionPath(dir.path(), key), dir / set.scene_id / "plan" / (std::to_string(set.image_id) + ".c3p"));
  EXPECT_EQ(CodeOf([&] { ReadPredictionFile(dir.path(), key); }), ErrorCode::kMissingFile);

  WritePredictionFile(dir.path(), set, true);
  EXPECT_EQ(ReadPredictionFile(dir.path(), key), set);
  PredictionSet text = set;
  text.entries.resize(3);
  WritePredictionFile(dir.path(), text, false);
  EXPECT_EQ(ReadPredictionFile(dir.path(), key), text);
}

TEST(PredictionFiles, EvaluateReadsFromDisk) {
  const std::vector<testing::SyntheticScene> scenes = {testing::MakeSyntheticScene(93, "a")};
  Dataset d = testing::DeriveDataset(scenes);
  testing::TempDir dir;
  bool binary = false;
  for (const auto& gt : d.pairs) {
    WritePredictionFile(dir.path(), GroundTruthAsPredictions(gt), binary);
    binary = !binary;
  }
  const MetricReport r = Evaluate(d, dir.path());
  EXPECT_EQ(r.per_pair.size(), d.pairs.size());
  EXPECT_EQ(r.aggregate_rmse, 0.0);

  // A file whose header names another pair is rejected.
  PredictionSet wrong = GroundTruthAsPredictions(d.pairs[0]);
  wrong.image_id += 1000;
  const std::string text = FormatPredictionText(wrong);
  std::ofstream(PredictionPath(dir.path(), {d.pairs[0].scene_id, d.pairs[0].plan_id, d.pairs[0].image_id}))
      << text;
  EXPECT_EQ(CodeOf([&] { Evaluate(d, dir.path()); }), ErrorCode::kValidationError);
}

TEST(PredictionCheck, CountsViolations) {
  PredictionSet set;
  set.entries = {{{-1, 0}, {0.5, 0.5}, {}},
                 {{10, 10}, {1.5, 0.5}, {}},
                 {{10, 10}, {std::nan(""), 0.5}, {}},
                 {{640, 480}, {0, 1}, {}}};
  const PredictionCheck c = CheckPredictions(set, 640, 480);
  EXPECT_EQ(c.queries_out_of_bounds, 1u);
  EXPECT_EQ(c.predictions_outside_unit_square, 1u);
  EXPECT_EQ(c.non_finite, 1u);
}

}  // namespace
}  // namespace c3
