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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "c3/correspondence.h"
#include "c3/dataset.h"

namespace c3 {

// Correctness radius for PR curves, in normalized plan units.
inline constexpr double kDefaultCorrectThreshold = 0.05;
// Maximum per-axis photo-pixel offset between a prediction's query and a GT
// record, so a record always matches the grid cell it rounds to.
inline constexpr double kQueryMatchTolerancePx = 0.5;

struct PredictionEntry {
  Eigen::Vector2d query = Eigen::Vector2d::Zero();      // photo pixels
  Eigen::Vector2d plan_norm = Eigen::Vector2d::Zero();  // unit-square plan
  std::optional<double> confidence;

  bool operator==(const PredictionEntry& other) const {
    return query == other.query && plan_norm == other.plan_norm &&
           confidence == other.confidence;
  }
};

struct PredictionSet {
  std::string scene_id;
  std::string plan_id;
  uint32_t image_id = 0;
  std::vector<PredictionEntry> entries;

  bool HasAllConfidences() const;

  bool operator==(const PredictionSet&) const = default;
};

struct PredictionCheck {
  size_t queries_out_of_bounds = 0;
  size_t predictions_outside_unit_square = 0;
  size_t non_finite = 0;
};

// Counts entries violating (or, for off-plan predictions, merely flagged by)
// the prediction invariants.
PredictionCheck CheckPredictions(const PredictionSet& set, uint32_t photo_width,
                                 uint32_t photo_height);

// --- Pointmaps -------------------------------------------------------------

enum class PointmapConvention { kNormalized, kPlanPixels };

// H x W grid of 3D points in the plan's frame, row-major.
struct Pointmap {
  int width = 0;
  int height = 0;
  std::vector<Eigen::Vector3d> points;
  std::vector<double> confidence;  // empty, or width * height values

  const Eigen::Vector3d& at(int u, int v) const {
    return points[static_cast<size_t>(v) * width + u];
  }
};

// Cell (u, v) becomes query (u, v) with prediction (x, z): the up
// coordinate is dropped. Throws kDimensionMismatch.
PredictionSet PointmapToPredictions(const Pointmap& pointmap,
                                    PointmapConvention convention,
                                    const Eigen::Vector2d& plan_dims = {1, 1});

// --- Sparse densification --------------------------------------------------

struct SparseMatch {
  Eigen::Vector2d query;
  Eigen::Vector2d plan_norm;
  std::optional<double> confidence;
};

// Each query takes the prediction of its nearest sparse match (ties to the
// lowest index). Throws kEmptySparseSet.
std::vector<PredictionEntry> DensifySparse(std::span<const SparseMatch> sparse,
                                           std::span<const Eigen::Vector2d> queries);

// --- Per-pair errors -------------------------------------------------------

struct MatchedRecord {
  double error = 0.0;  // normalized Euclidean distance
  std::optional<double> confidence;
};

// Pairs every GT record with the prediction whose query is nearest to the
// record's photo pixel among those within kQueryMatchTolerancePx on both axes
// (ties to the lowest index). Throws kEmptyGroundTruth, or kMissingPredictions listing the
// uncovered photo pixels.
std::vector<MatchedRecord> MatchToGroundTruth(const PredictionSet& pred,
                                              const CorrespondenceSet& gt);

// sqrt(mean squared normalized error).
double Rmse(const PredictionSet& pred, const CorrespondenceSet& gt);
double RmseFromErrors(std::span<const MatchedRecord> matched);

struct PckPoint {
  double threshold = 0.0;
  double fraction = 0.0;
};

// Fraction of errors <= threshold for each (ascending) threshold. Throws
// kEmptyErrors or kInvalidArgument for unsorted thresholds.
std::vector<PckPoint> Pck(std::span<const double> errors,
                          std::span<const double> thresholds);

// Default PCK thresholds: 0.01, 0.02, ..., 0.50.
std::vector<double> DefaultPckThresholds();

struct PrPoint {
  double confidence_threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Precision/recall at one confidence threshold.
PrPoint PrAt(std::span<const MatchedRecord> matched, double confidence_threshold,
             double correct_threshold = kDefaultCorrectThreshold);

// Sweep over the sorted unique confidences. Throws kConfidenceRequired or
// kEmptyGroundTruth.
std::vector<PrPoint> PrCurve(std::span<const MatchedRecord> matched,
                             double correct_threshold = kDefaultCorrectThreshold);
std::vector<PrPoint> PrCurve(const PredictionSet& pred, const CorrespondenceSet& gt,
                             double correct_threshold = kDefaultCorrectThreshold);

// --- Significance ----------------------------------------------------------

struct WilcoxonResult {
  double w = 0.0;        // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  size_t n = 0;          // non-zero differences
  double p_value = 1.0;  // two-sided
  bool exact = true;
};

inline constexpr size_t kWilcoxonExactMaxN = 25;

// Paired signed-rank test on a - b. Zero differences are dropped, ties get
// average ranks. Exact p for n <= 25, otherwise the normal approximation
// with tie and continuity corrections. Throws kLengthMismatch or
// kAllZeroDifferences.
WilcoxonResult WilcoxonSignedRank(std::span<const double> a,
                                  std::span<const double> b);

// Normal-approximation p for the same statistic regardless of n.
double WilcoxonNormalApproxP(std::span<const double> a, std::span<const double> b);

// 1 - ours / baseline.
double ImprovementRatio(double baseline_error, double our_error);
// "34%"
std::string FormatPercent(double ratio);

// --- Evaluation ------------------------------------------------------------

enum class SplitFilter { kAll, kTrain, kTest };

struct EvaluateOptions {
  std::vector<double> pck_thresholds = DefaultPckThresholds();
  double correct_threshold = kDefaultCorrectThreshold;
  SplitFilter split = SplitFilter::kTest;
  // Pairs without predictions are reported instead of failing the run.
  bool allow_missing = false;
  // name -> predictions root, compared against the main predictions with the
  // signed-rank test over per-pair RMSE.
  std::map<std::string, std::filesystem::path> baselines;
  int jobs = 1;
};

struct PairKey {
  std::string scene_id;
  std::string plan_id;
  uint32_t image_id = 0;

  auto operator<=>(const PairKey&) const = default;
  std::string ToString() const;
};

struct PairMetric {
  PairKey key;
  size_t records = 0;
  double rmse = 0.0;
};

struct PairFailure {
  PairKey key;
  ErrorCode code = ErrorCode::kMissingPredictions;
  std::string message;
};

struct BaselineComparison {
  std::string name;
  size_t paired = 0;
  double baseline_rmse = 0.0;  // mean per-pair over the paired set
  double our_rmse = 0.0;
  double improvement = 0.0;
  std::optional<WilcoxonResult> test;  // absent when every difference is 0
};

struct MetricReport {
  std::vector<PairMetric> per_pair;  // ordered by key
  double aggregate_rmse = 0.0;       // mean of per-pair RMSE
  double pooled_rmse = 0.0;          // over all records
  std::vector<PckPoint> pck;         // pooled over records
  std::vector<PckPoint> pck_per_pair_mean;
  std::vector<PrPoint> pr;           // empty when confidences are missing
  bool pr_available = false;
  std::vector<BaselineComparison> comparisons;
  std::vector<PairFailure> failures;
  size_t expected_pairs = 0;
};

// Scores every selected pair of `dataset` against predictions found under
// `predictions_root` (see PredictionPath). Throws kMissingPredictions with a
// failure list unless allow_missing is set.
MetricReport Evaluate(const Dataset& dataset,
                      const std::filesystem::path& predictions_root,
                      const EvaluateOptions& options = {});

// Pure form over in-memory predictions.
MetricReport EvaluatePredictions(
    const Dataset& dataset, const std::map<PairKey, PredictionSet>& predictions,
    const EvaluateOptions& options = {},
    const std::map<std::string, std::map<PairKey, PredictionSet>>& baselines = {});

// --- Prediction files ------------------------------------------------------

// <root>/<scene_id>/<plan_id>/<image_id>.c3p (text) or .c3pr (binary).
std::filesystem::path PredictionPath(const std::filesystem::path& root,
                                     const PairKey& key, bool binary = false);

std::string FormatPredictionText(const PredictionSet& set);
PredictionSet ParsePredictionText(std::string_view text);

std::vector<uint8_t> EncodePredictionBinary(const PredictionSet& set);
PredictionSet DecodePredictionBinary(std::span<const uint8_t> bytes);

// Reads whichever of the two files exists (text preferred). Throws
// kMissingFile when neither does.
PredictionSet ReadPredictionFile(const std::filesystem::path& root,
                                 const PairKey& key);
void WritePredictionFile(const std::filesystem::path& root,
                         const PredictionSet& set, bool binary = false);

// GT records as predictions (confidence 1), for self-evaluation.
PredictionSet GroundTruthAsPredictions(const CorrespondenceSet& gt);

}  // namespace c3
