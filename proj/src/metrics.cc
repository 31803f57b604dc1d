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

#include "c3/metrics.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "c3/error.h"
#include "c3/util.h"

namespace c3 {
namespace {

// Static 2D k-d tree over sparse query positions. Nearest-neighbour search
// orders candidates by (squared distance, index), so ties resolve to the
// lowest index exactly as a linear scan would.
class KdTree2 {
 public:
  explicit KdTree2(std::span<const SparseMatch> points) : points_(points) {
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(points.size());
    root_ = Build(0, order_.size(), 0);
  }

  size_t Nearest(const Eigen::Vector2d& q) const {
    size_t best = points_.size();
    double best_d2 = std::numeric_limits<double>::infinity();
    Search(root_, q, best, best_d2);
    return best;
  }

 private:
  struct Node {
    size_t index;
    int axis;
    int left = -1;
    int right = -1;
  };

  int Build(size_t begin, size_t end, int depth) {
    if (begin >= end) return -1;
    const int axis = depth % 2;
    const size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](size_t a, size_t b) {
                       const double va = points_[a].query[axis];
                       const double vb = points_[b].query[axis];
                       return va < vb || (va == vb && a < b);
                     });
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({order_[mid], axis});
    const int left = Build(begin, mid, depth + 1);
    const int right = Build(mid + 1, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void Search(int node_id, const Eigen::Vector2d& q, size_t& best,
              double& best_d2) const {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    const Eigen::Vector2d& p = points_[node.index].query;
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && node.index < best)) {
      best_d2 = d2;
      best = node.index;
    }
    const double delta = q[node.axis] - p[node.axis];
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    Search(near, q, best, best_d2);
    // Equal splitting values can sit on either side, so only prune strictly.
    if (delta * delta <= best_d2) Search(far, q, best, best_d2);
  }

  std::span<const SparseMatch> points_;
  std::vector<size_t> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Buckets prediction queries into unit pixel cells for tolerance lookups.
class QueryIndex {
 public:
  explicit QueryIndex(const std::vector<PredictionEntry>& entries)
      : entries_(entries) {
    cells_.reserve(entries.size());
    for (size_t i = 0; i < entries.size(); ++i) {
      if (!entries[i].query.allFinite()) continue;
      cells_[Key(std::floor(entries[i].query.x()), std::floor(entries[i].query.y()))]
          .push_back(i);
    }
  }

  std::optional<size_t> Find(const Eigen::Vector2d& p, double tolerance) const {
    std::optional<size_t> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    const int64_t x0 = static_cast<int64_t>(std::floor(p.x() - tolerance));
    const int64_t x1 = static_cast<int64_t>(std::floor(p.x() + tolerance));
    const int64_t y0 = static_cast<int64_t>(std::floor(p.y() - tolerance));
    const int64_t y1 = static_cast<int64_t>(std::floor(p.y() + tolerance));
    for (int64_t cy = y0; cy <= y1; ++cy) {
      for (int64_t cx = x0; cx <= x1; ++cx) {
        const auto it = cells_.find(Key(static_cast<double>(cx), static_cast<double>(cy)));
        if (it == cells_.end()) continue;
        for (const size_t i : it->second) {
          const Eigen::Vector2d delta = entries_[i].query - p;
          if (delta.cwiseAbs().maxCoeff() > tolerance) continue;
          const double d2 = delta.squaredNorm();
          if (d2 < best_d2 || (d2 == best_d2 && (!best || i < *best))) {
            best_d2 = d2;
            best = i;
          }
        }
      }
    }
    return best;
  }

 private:
  static uint64_t Key(double cx, double cy) {
    const auto x = static_cast<uint64_t>(static_cast<int64_t>(cx));
    const auto y = static_cast<uint64_t>(static_cast<int64_t>(cy));
    return Mix64(x) ^ (y * 0x9e3779b97f4a7c15ULL);
  }

  const std::vector<PredictionEntry>& entries_;
  std::unordered_map<uint64_t, std::vector<size_t>> cells_;
};

}  // namespace

bool PredictionSet::HasAllConfidences() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const PredictionEntry& e) { return e.confidence.has_value(); });
}

PredictionCheck CheckPredictions(const PredictionSet& set, uint32_t photo_width,
                                 uint32_t photo_height) {
  PredictionCheck check;
  for (const PredictionEntry& e : set.entries) {
    if (!e.query.allFinite() || !e.plan_norm.allFinite()) {
      ++check.non_finite;
      continue;
    }
    if (e.query.x() < 0 || e.query.y() < 0 || e.query.x() > photo_width ||
        e.query.y() > photo_height) {
      ++check.queries_out_of_bounds;
    }
    if (e.plan_norm.x() < 0 || e.plan_norm.y() < 0 || e.plan_norm.x() > 1 ||
        e.plan_norm.y() > 1) {
      ++check.predictions_outside_unit_square;
    }
  }
  return check;
}

PredictionSet PointmapToPredictions(const Pointmap& pointmap,
                                    PointmapConvention convention,
                                    const Eigen::Vector2d& plan_dims) {
  const size_t cells = static_cast<size_t>(std::max(pointmap.width, 0)) *
                       static_cast<size_t>(std::max(pointmap.height, 0));
  if (pointmap.points.size() != cells ||
      (!pointmap.confidence.empty() && pointmap.confidence.size() != cells)) {
    Fail(ErrorCode::kDimensionMismatch,
         "pointmap grids do not match " + std::to_string(pointmap.width) + "x" +
             std::to_string(pointmap.height));
  }
  if (convention == PointmapConvention::kPlanPixels &&
      !(plan_dims.x() > 0 && plan_dims.y() > 0)) {
    Fail(ErrorCode::kInvalidArgument, "plan dimensions must be positive");
  }
  PredictionSet set;
  set.entries.reserve(cells);
  for (int v = 0; v < pointmap.height; ++v) {
    for (int u = 0; u < pointmap.width; ++u) {
      const size_t i = static_cast<size_t>(v) * pointmap.width + u;
      const Eigen::Vector3d& X = pointmap.points[i];
      PredictionEntry entry;
      entry.query = Eigen::Vector2d(u, v);
      entry.plan_norm = Eigen::Vector2d(X.x(), X.z());
      if (convention == PointmapConvention::kPlanPixels) {
        entry.plan_norm = entry.plan_norm.cwiseQuotient(plan_dims);
      }
      if (!pointmap.confidence.empty()) entry.confidence = pointmap.confidence[i];
      set.entries.push_back(entry);
    }
  }
  return set;
}

std::vector<PredictionEntry> DensifySparse(std::span<const SparseMatch> sparse,
                                           std::span<const Eigen::Vector2d> queries) {
  if (sparse.empty()) Fail(ErrorCode::kEmptySparseSet, "no sparse matches");
  const KdTree2 tree(sparse);
  std::vector<PredictionEntry> out;
  out.reserve(queries.size());
  for (const Eigen::Vector2d& q : queries) {
    const SparseMatch& match = sparse[tree.Nearest(q)];
    out.push_back({q, match.plan_norm, match.confidence});
  }
  return out;
}

std::vector<MatchedRecord> MatchToGroundTruth(const PredictionSet& pred,
                                              const CorrespondenceSet& gt) {
  if (gt.records.empty()) {
    Fail(ErrorCode::kEmptyGroundTruth, "pair has no ground-truth records");
  }
  const QueryIndex index(pred.entries);
  std::vector<MatchedRecord> matched;
  matched.reserve(gt.records.size());
  std::vector<std::string> missing;
  for (const Correspondence& record : gt.records) {
    const std::optional<size_t> hit = index.Find(record.photo_xy, kQueryMatchTolerancePx);
    if (!hit) {
      missing.push_back(FormatDouble(record.photo_xy.x()) + "," +
                        FormatDouble(record.photo_xy.y()));
      continue;
    }
    const PredictionEntry& entry = pred.entries[*hit];
    matched.push_back({(entry.plan_norm - gt.PlanNorm(record)).norm(), entry.confidence});
  }
  if (!missing.empty()) {
    Fail(ErrorCode::kMissingPredictions,
         std::to_string(missing.size()) + " of " + std::to_string(gt.records.size()) +
             " ground-truth pixels have no prediction",
         std::move(missing));
  }
  return matched;
}

double RmseFromErrors(std::span<const MatchedRecord> matched) {
  if (matched.empty()) Fail(ErrorCode::kEmptyGroundTruth, "no records");
  double sum = 0.0;
  for (const MatchedRecord& m : matched) sum += m.error * m.error;
  return std::sqrt(sum / static_cast<double>(matched.size()));
}

double Rmse(const PredictionSet& pred, const CorrespondenceSet& gt) {
  return RmseFromErrors(MatchToGroundTruth(pred, gt));
}

std::vector<PckPoint> Pck(std::span<const double> errors,
                          std::span<const double> thresholds) {
  if (errors.empty()) Fail(ErrorCode::kEmptyErrors, "no errors to score");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    Fail(ErrorCode::kInvalidArgument, "PCK thresholds must be ascending");
  }
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<PckPoint> curve;
  curve.reserve(thresholds.size());
  const double n = static_cast<double>(sorted.size());
  for (const double t : thresholds) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    curve.push_back({t, static_cast<double>(count) / n});
  }
  return curve;
}

std::vector<double> DefaultPckThresholds() {
  std::vector<double> thresholds;
  for (int i = 1; i <= 50; ++i) thresholds.push_back(i / 100.0);
  return thresholds;
}

PrPoint PrAt(std::span<const MatchedRecord> matched, double confidence_threshold,
             double correct_threshold) {
  if (matched.empty()) Fail(ErrorCode::kEmptyGroundTruth, "no records");
  size_t emitted = 0;
  size_t correct = 0;
  for (const MatchedRecord& m : matched) {
    if (!m.confidence) {
      Fail(ErrorCode::kConfidenceRequired, "prediction without confidence");
    }
    if (*m.confidence >= confidence_threshold) {
      ++emitted;
      if (m.error < correct_threshold) ++correct;
    }
  }
  const double precision =
      emitted == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(emitted);
  return {confidence_threshold, precision,
          static_cast<double>(correct) / static_cast<double>(matched.size())};
}

std::vector<PrPoint> PrCurve(std::span<const MatchedRecord> matched,
                             double correct_threshold) {
  if (matched.empty()) Fail(ErrorCode::kEmptyGroundTruth, "no records");
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(matched.size());
  for (const MatchedRecord& m : matched) {
    if (!m.confidence) {
      Fail(ErrorCode::kConfidenceRequired, "prediction without confidence");
    }
    scored.emplace_back(*m.confidence, m.error < correct_threshold);
  }
  // Descending confidence; sweep thresholds from the top so each step adds
  // the entries at that confidence.
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<PrPoint> curve;
  const double total = static_cast<double>(matched.size());
  size_t emitted = 0;
  size_t correct = 0;
  for (size_t i = 0; i < scored.size();) {
    const double threshold = scored[i].first;
    while (i < scored.size() && scored[i].first == threshold) {
      ++emitted;
      if (scored[i].second) ++correct;
      ++i;
    }
    curve.push_back({threshold,
                     static_cast<double>(correct) / static_cast<double>(emitted),
                     static_cast<double>(correct) / total});
  }
  std::reverse(curve.begin(), curve.end());
  return curve;
}

std::vector<PrPoint> PrCurve(const PredictionSet& pred, const CorrespondenceSet& gt,
                             double correct_threshold) {
  const std::vector<MatchedRecord> matched = MatchToGroundTruth(pred, gt);
  return PrCurve(matched, correct_threshold);
}

double ImprovementRatio(double baseline_error, double our_error) {
  if (!(baseline_error > 0)) {
    Fail(ErrorCode::kInvalidArgument, "baseline error must be positive");
  }
  return 1.0 - our_error / baseline_error;
}

std::string FormatPercent(double ratio) {
  return std::to_string(std::lround(ratio * 100.0)) + "%";
}

std::string PairKey::ToString() const {
  return scene_id + "/" + plan_id + "/" + std::to_string(image_id);
}

PredictionSet GroundTruthAsPredictions(const CorrespondenceSet& gt) {
  PredictionSet set;
  set.scene_id = gt.scene_id;
  set.plan_id = gt.plan_id;
  set.image_id = gt.image_id;
  for (const Correspondence& record : gt.records) {
    set.entries.push_back({record.photo_xy, gt.PlanNorm(record), 1.0});
  }
  return set;
}

MetricReport EvaluatePredictions(
    const Dataset& dataset, const std::map<PairKey, PredictionSet>& predictions,
    const EvaluateOptions& options,
    const std::map<std::string, std::map<PairKey, PredictionSet>>& baselines) {
  std::map<std::string, Split> scene_split;
  for (const SceneManifest& scene : dataset.scenes) {
    scene_split[scene.scene_id] = scene.split;
  }
  std::vector<const CorrespondenceSet*> selected;
  for (const CorrespondenceSet& set : dataset.pairs) {
    const Split split = scene_split.count(set.scene_id) ? scene_split[set.scene_id]
                                                        : Split::kNone;
    if (options.split == SplitFilter::kTest && split != Split::kTest) continue;
    if (options.split == SplitFilter::kTrain && split != Split::kTrain) continue;
    selected.push_back(&set);
  }
  std::sort(selected.begin(), selected.end(), [](const auto* a, const auto* b) {
    return std::tie(a->scene_id, a->plan_id, a->image_id) <
           std::tie(b->scene_id, b->plan_id, b->image_id);
  });

  struct Outcome {
    std::optional<std::vector<MatchedRecord>> matched;
    std::optional<PairFailure> failure;
  };
  auto score = [](const std::map<PairKey, PredictionSet>& source,
                  const CorrespondenceSet& gt) {
    const PairKey key{gt.scene_id, gt.plan_id, gt.image_id};
    Outcome outcome;
    const auto it = source.find(key);
    if (it == source.end()) {
      outcome.failure = PairFailure{key, ErrorCode::kMissingPredictions,
                                    "no prediction file for pair"};
      return outcome;
    }
    try {
      outcome.matched = MatchToGroundTruth(it->second, gt);
    } catch (const Error& e) {
      outcome.failure = PairFailure{key, e.code(), e.what()};
    }
    return outcome;
  };

  std::vector<Outcome> outcomes(selected.size());
  const size_t jobs = static_cast<size_t>(std::max(options.jobs, 1));
  if (jobs == 1) {
    for (size_t i = 0; i < selected.size(); ++i) outcomes[i] = score(predictions, *selected[i]);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::jthread> workers;
    for (size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (size_t i = next++; i < selected.size(); i = next++) {
          outcomes[i] = score(predictions, *selected[i]);
        }
      });
    }
  }

  MetricReport report;
  report.expected_pairs = selected.size();
  std::vector<double> pooled;
  std::vector<MatchedRecord> pooled_matched;
  std::vector<double> pck_sum(options.pck_thresholds.size(), 0.0);
  bool all_confident = true;
  std::map<PairKey, double> our_rmse;
  for (size_t i = 0; i < selected.size(); ++i) {
    const CorrespondenceSet& gt = *selected[i];
    const PairKey key{gt.scene_id, gt.plan_id, gt.image_id};
    if (outcomes[i].failure) {
      report.failures.push_back(*outcomes[i].failure);
      continue;
    }
    const std::vector<MatchedRecord>& matched = *outcomes[i].matched;
    const double rmse = RmseFromErrors(matched);
    report.per_pair.push_back({key, matched.size(), rmse});
    our_rmse[key] = rmse;
    std::vector<double> errors;
    errors.reserve(matched.size());
    for (const MatchedRecord& m : matched) {
      errors.push_back(m.error);
      all_confident = all_confident && m.confidence.has_value();
    }
    const std::vector<PckPoint> pair_pck = Pck(errors, options.pck_thresholds);
    for (size_t t = 0; t < pair_pck.size(); ++t) pck_sum[t] += pair_pck[t].fraction;
    pooled.insert(pooled.end(), errors.begin(), errors.end());
    pooled_matched.insert(pooled_matched.end(), matched.begin(), matched.end());
  }

  if (!report.failures.empty() && !options.allow_missing) {
    std::vector<std::string> details;
    for (const PairFailure& f : report.failures) {
      details.push_back(f.key.ToString() + " " + std::string(ErrorCodeName(f.code)));
    }
    Fail(ErrorCode::kMissingPredictions,
         std::to_string(report.failures.size()) + " of " +
             std::to_string(selected.size()) + " pairs could not be scored",
         std::move(details));
  }
  if (report.per_pair.empty()) {
    Fail(ErrorCode::kEmptyGroundTruth, "no pairs were scored");
  }

  double rmse_sum = 0.0;
  for (const PairMetric& m : report.per_pair) rmse_sum += m.rmse;
  report.aggregate_rmse = rmse_sum / static_cast<double>(report.per_pair.size());
  report.pooled_rmse = RmseFromErrors(pooled_matched);
  report.pck = Pck(pooled, options.pck_thresholds);
  for (size_t t = 0; t < pck_sum.size(); ++t) {
    report.pck_per_pair_mean.push_back(
        {options.pck_thresholds[t], pck_sum[t] / static_cast<double>(report.per_pair.size())});
  }
  if (all_confident) {
    report.pr = PrCurve(pooled_matched, options.correct_threshold);
    report.pr_available = true;
  }

  for (const auto& [name, source] : baselines) {
    BaselineComparison cmp;
    cmp.name = name;
    std::vector<double> ours;
    std::vector<double> theirs;
    for (const CorrespondenceSet* gt : selected) {
      const PairKey key{gt->scene_id, gt->plan_id, gt->image_id};
      const auto mine = our_rmse.find(key);
      if (mine == our_rmse.end()) continue;
      const Outcome outcome = score(source, *gt);
      if (!outcome.matched) continue;
      ours.push_back(mine->second);
      theirs.push_back(RmseFromErrors(*outcome.matched));
    }
    cmp.paired = ours.size();
    if (!ours.empty()) {
      cmp.our_rmse = std::accumulate(ours.begin(), ours.end(), 0.0) / ours.size();
      cmp.baseline_rmse =
          std::accumulate(theirs.begin(), theirs.end(), 0.0) / theirs.size();
      if (cmp.baseline_rmse > 0) {
        cmp.improvement = ImprovementRatio(cmp.baseline_rmse, cmp.our_rmse);
      }
      try {
        cmp.test = WilcoxonSignedRank(ours, theirs);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kAllZeroDifferences) throw;
      }
    }
    report.comparisons.push_back(std::move(cmp));
  }
  return report;
}

MetricReport Evaluate(const Dataset& dataset,
                      const std::filesystem::path& predictions_root,
                      const EvaluateOptions& options) {
  auto load_all = [&](const std::filesystem::path& root) {
    std::map<PairKey, PredictionSet> loaded;
    for (const CorrespondenceSet& set : dataset.pairs) {
      const PairKey key{set.scene_id, set.plan_id, set.image_id};
      try {
        PredictionSet pred = ReadPredictionFile(root, key);
        if (pred.scene_id != key.scene_id || pred.plan_id != key.plan_id ||
            pred.image_id != key.image_id) {
          Fail(ErrorCode::kValidationError,
               "prediction header does not match its path for " + key.ToString());
        }
        loaded.emplace(key, std::move(pred));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMissingFile) throw;
      }
    }
    return loaded;
  };
  std::map<std::string, std::map<PairKey, PredictionSet>> baselines;
  for (const auto& [name, root] : options.baselines) baselines[name] = load_all(root);
  return EvaluatePredictions(dataset, load_all(predictions_root), options, baselines);
}

}  // namespace c3
