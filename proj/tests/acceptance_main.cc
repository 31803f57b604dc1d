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

// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Every expected value comes from an oracle written here.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "c3/align_service.h"
#include "c3/colmap_io.h"
#include "c3/correspondence.h"
#include "c3/dataset.h"
#include "c3/error.h"
#include "c3/geometry.h"
#include "c3/metrics.h"
#include "c3/sourcing.h"
#include "c3/util.h"
#include "json.hpp"
#include "test_util.h"

namespace c3 {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;
constexpr double kPi = std::numbers::pi;

// Collects the first few failure messages of one criterion.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (messages_.size() < 5) messages_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  std::string Summary() const {
    std::string s = std::to_string(failures_) + " failure(s)";
    for (const std::string& m : messages_) s += "; " + m;
    return s;
  }

 private:
  size_t failures_ = 0;
  std::vector<std::string> messages_;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, value);
  return buf;
}

// --- Parser ------------------------------------------------------------------

bool Near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool ModelsNear(const SparseModel& a, const SparseModel& b, double tol) {
  if (a.cameras.size() != b.cameras.size() || a.images.size() != b.images.size() ||
      a.points.size() != b.points.size()) {
    return false;
  }
  for (const auto& [id, ca] : a.cameras) {
    auto it = b.cameras.find(id);
    if (it == b.cameras.end()) return false;
    const CameraIntrinsics& cb = it->second;
    if (ca.model != cb.model || ca.width != cb.width || ca.height != cb.height ||
        ca.params.size() != cb.params.size()) {
      return false;
    }
    for (size_t i = 0; i < ca.params.size(); ++i) {
      if (!Near(ca.params[i], cb.params[i], tol)) return false;
    }
  }
  for (const auto& [id, ia] : a.images) {
    auto it = b.images.find(id);
    if (it == b.images.end()) return false;
    const ImagePose& ib = it->second;
    if (ia.camera_id != ib.camera_id || ia.name != ib.name ||
        ia.observations.size() != ib.observations.size() ||
        (ia.qvec - ib.qvec).cwiseAbs().maxCoeff() > tol ||
        (ia.tvec - ib.tvec).cwiseAbs().maxCoeff() > tol) {
      return false;
    }
    for (size_t i = 0; i < ia.observations.size(); ++i) {
      const Observation& oa = ia.observations[i];
      const Observation& ob = ib.observations[i];
      if (!Near(oa.x, ob.x, tol) || !Near(oa.y, ob.y, tol) || oa.point3d_id != ob.point3d_id) {
        return false;
      }
    }
  }
  for (const auto& [id, pa] : a.points) {
    auto it = b.points.find(id);
    if (it == b.points.end()) return false;
    const ScenePoint& pb = it->second;
    if (pa.rgb != pb.rgb || pa.track != pb.track || !Near(pa.error, pb.error, tol) ||
        (pa.xyz - pb.xyz).cwiseAbs().maxCoeff() > tol) {
      return false;
    }
  }
  return true;
}

bool BitEqual(const SparseModel& a, const SparseModel& b) {
  if (!(a == b)) return false;
  for (const auto& [id, p] : a.points) {
    if (std::memcmp(p.xyz.data(), b.points.at(id).xyz.data(), sizeof(double) * 3) != 0) return false;
  }
  for (const auto& [id, im] : a.images) {
    const ImagePose& o = b.images.at(id);
    if (std::memcmp(im.qvec.data(), o.qvec.data(), sizeof(double) * 4) != 0 ||
        std::memcmp(im.tvec.data(), o.tvec.data(), sizeof(double) * 3) != 0) {
      return false;
    }
  }
  return true;
}

// Breaks one cross reference; returns false when the model has nothing to break.
bool InjectDangling(SparseModel& m, int kind) {
  switch (kind) {
    case 0:
      for (auto& [id, im] : m.images) {
        for (Observation& o : im.observations) {
          if (o.point3d_id) {
            o.point3d_id = 0xDEADBEEFULL;
            return true;
          }
        }
      }
      return false;
    case 1:
      if (m.images.empty()) return false;
      m.images.begin()->second.camera_id = 0x7FFFFFFF;
      return true;
    case 2:
    case 3:
    case 4:
      for (auto& [id, p] : m.points) {
        if (p.track.empty()) continue;
        if (kind == 2) p.track[0].image_id = 0x7FFFFFFF;
        if (kind == 3) p.track[0].observation_index = 0x7FFFFFFF;
        if (kind == 4) p.track.erase(p.track.begin());
        return true;
      }
      return false;
  }
  return false;
}

bool ParserRoundTrip(std::string& detail) {
  const auto start = Clock::now();
  Check check;
  std::mt19937_64 rng(1001);
  testing::TempDir dir;
  size_t injected = 0;
  size_t max_points = 0;
  for (int trial = 0; trial < 200; ++trial) {
    testing::RandomModelOptions opt;
    opt.cameras = 1 + trial % 5;
    opt.images = 2 + trial % 40;
    opt.points = trial == 199 ? 10000 : 20 + static_cast<size_t>(rng() % 9981);
    max_points = std::max(max_points, opt.points);
    const SparseModel m = testing::RandomModel(rng, opt);
    const std::string tag = "trial " + std::to_string(trial);
    try {
      WriteModel(m, dir / "b", ModelFormat::kBinary);
      check.Expect(BitEqual(ReadModel(dir / "b", ModelFormat::kBinary), m), tag + " binary");
      WriteModel(m, dir / "t", ModelFormat::kText);
      check.Expect(ModelsNear(ReadModel(dir / "t", ModelFormat::kText), m, 1e-9), tag + " text");
    } catch (const std::exception& e) {
      check.Expect(false, tag + ": " + e.what());
    }
    SparseModel bad = m;
    if (!InjectDangling(bad, trial % 5)) continue;
    ++injected;
    bool caught = false;
    try {
      WriteModel(bad, dir / "bad", ModelFormat::kBinary);
      ReadModel(dir / "bad", ModelFormat::kBinary);
    } catch (const Error& e) {
      caught = e.code() == ErrorCode::kIntegrityError;
    }
    check.Expect(caught, tag + " dangling kind " + std::to_string(trial % 5) + " not caught");
  }
  const double secs = Seconds(start);
  check.Expect(secs < 30.0, "runtime " + Fmt("%.1f s", secs));
  check.Expect(injected == 200, "only " + std::to_string(injected) + " injections possible");
  detail = "200 models up to " + std::to_string(max_points) + " points, " +
           std::to_string(injected) + " injections, " + Fmt("%.1f s", secs);
  if (!check.ok()) detail += "; " + check.Summary();
  return check.ok();
}

// --- Projection ---------------------------------------------------------------

bool ProjectionOracle(std::string& detail) {
  Check check;
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> u(-0.6, 0.6), depth(0.5, 40), t(-20, 20);
  double worst = 0;
  for (int scene = 0; scene < 50; ++scene) {
    const auto model = static_cast<CameraModel>(scene % 5);
    const CameraIntrinsics cam = testing::RandomCamera(rng, 1, model);
    for (int view = 0; view < 4; ++view) {
      ImagePose pose;
      pose.qvec = testing::RandomUnitQuaternion(rng);
      pose.tvec = {t(rng), t(rng), t(rng)};
      const Eigen::Matrix3d r = QuaternionToRotationMatrix(pose.qvec);
      for (int i = 0; i < 50; ++i) {
        const Eigen::Vector2d n(u(rng), u(rng));
        const double d = depth(rng);
        const Eigen::Vector3d X = r.transpose() * (Eigen::Vector3d(n.x() * d, n.y() * d, d) - pose.tvec);
        // The oracle re-derives camera coordinates by the quaternion sandwich.
        const Eigen::Vector3d xc = testing::QuaternionSandwich(pose.qvec, X) + pose.tvec;
        const Eigen::Vector2d pixel = testing::OracleDistort(cam, xc.head<2>() / xc.z());
        const double err = (ProjectPoint(cam, pose, X) - pixel).cwiseAbs().maxCoeff();
        worst = std::max(worst, err);
        check.Expect(err <= 1e-9, "scene " + std::to_string(scene) + Fmt(" error %.3g px", err));
      }
    }
  }
  detail = "50 scenes x 200 points, 5 camera models, max error " + Fmt("%.2g px", worst);
  if (!check.ok()) detail += "; " + check.Summary();
  return check.ok();
}

// --- Similarity recovery ------------------------------------------------------

using Pairs = std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>;

double AngleGap(double a, double b) {
  return std::abs(std::remainder(a - b, 2 * kPi));
}

// Applies s R(theta) p + t from its scalar definition.
Eigen::Vector2d ApplyOracle(double s, double theta, double tx, double ty, const Eigen::Vector2d& p) {
  return {s * (std::cos(theta) * p.x() - std::sin(theta) * p.y()) + tx,
          s * (std::sin(theta) * p.x() + std::cos(theta) * p.y()) + ty};
}

bool TransformRecovery(std::string& detail) {
  Check check;
  std::mt19937_64 rng(1003);
  std::uniform_real_distribution<double> scale(0.5, 5), angle(-kPi, kPi), shift(-100, 100),
      coord(-10, 10);
  std::normal_distribution<double> noise(0.0, 0.01);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double s = scale(rng), th = angle(rng), tx = shift(rng), ty = shift(rng);
    Pairs pairs;
    const int n = 2 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector2d p(coord(rng), coord(rng));
      pairs.emplace_back(p, ApplyOracle(s, th, tx, ty, p));
    }
    const SimilarityTransform2D est = EstimateSimilarity(pairs);
    const double err = std::max({std::abs(est.scale() - s), AngleGap(est.theta(), th),
                                 std::abs(est.tx() - tx), std::abs(est.ty() - ty)});
    worst = std::max(worst, err);
    check.Expect(err <= 1e-9, "noiseless trial " + std::to_string(trial) + Fmt(" error %.3g", err));
  }
  int good = 0;
  const int noisy_trials = 1000;
  for (int trial = 0; trial < noisy_trials; ++trial) {
    const double s = scale(rng), th = angle(rng), tx = shift(rng), ty = shift(rng);
    Pairs pairs;
    const int n = 20 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector2d p(coord(rng), coord(rng));
      pairs.emplace_back(p, ApplyOracle(s, th, tx, ty, p) + Eigen::Vector2d(noise(rng), noise(rng)));
    }
    const SimilarityTransform2D est = EstimateSimilarity(pairs);
    good += std::abs(est.scale() / s - 1) <= 0.01 && AngleGap(est.theta(), th) <= 0.5 * kPi / 180;
  }
  const double rate = static_cast<double>(good) / noisy_trials;
  check.Expect(rate >= 0.99, Fmt("noisy success rate %.4f", rate));
  detail = "noiseless max error " + Fmt("%.2g", worst) + ", noisy success " + Fmt("%.1f%%", rate * 100);
  if (!check.ok()) detail += "; " + check.Summary();
  return check.ok();
}

// --- End to end ------------------------------------------------------------------

bool EndToEnd(std::string& detail) {
  const auto start = Clock::now();
  Check check;
  testing::TempDir dir;
  std::vector<testing::SyntheticScene> scenes;
  for (int i = 0; i < 3; ++i) {
    testing::SyntheticSceneOptions opt;
    opt.images = 8;
    opt.points = 600;
    scenes.push_back(testing::MakeSyntheticScene(1004 + i, "scene" + std::to_string(i), opt));
  }
  testing::WriteSourceRoot(scenes, dir / "src");
  Dataset derived;
  for (const testing::SyntheticScene& s : scenes) {
    derived.scenes.push_back(s.manifest);
    SceneDerivation d = DeriveScene(s.model, s.alignment, {}, s.scene_id);
    for (CorrespondenceSet& set : d.sets) derived.pairs.push_back(std::move(set));
  }
  derived.Canonicalize();
  ExportDataset(derived, dir / "ds", {dir / "src", 2});
  const Dataset imported = ImportDataset(dir / "ds");
  check.Expect(imported.pairs.size() == derived.pairs.size(), "pair count changed on import");

  // Ground truth fed back as predictions with spread confidences.
  std::mt19937_64 rng(1007);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  size_t records = 0;
  for (const CorrespondenceSet& gt : imported.pairs) {
    PredictionSet pred = GroundTruthAsPredictions(gt);
    for (PredictionEntry& e : pred.entries) e.confidence = std::round(conf(rng) * 20) / 20;
    WritePredictionFile(dir / "pred", pred, records % 2 == 0);
    records += gt.records.size();
  }
  EvaluateOptions options;
  options.split = SplitFilter::kAll;
  options.pck_thresholds = {1e-12, 1e-6, 0.001};
  for (double t : DefaultPckThresholds()) options.pck_thresholds.push_back(t);
  const MetricReport report = Evaluate(imported, dir / "pred", options);
  check.Expect(report.per_pair.size() == imported.pairs.size(), "not every pair scored");
  check.Expect(report.aggregate_rmse == 0.0, Fmt("aggregate RMSE %.3g", report.aggregate_rmse));
  check.Expect(report.pooled_rmse == 0.0, Fmt("pooled RMSE %.3g", report.pooled_rmse));
  for (const PckPoint& p : report.pck) {
    check.Expect(p.fraction == 1.0, Fmt("PCK below 1 at %.3g", p.threshold));
  }
  check.Expect(report.pr_available && report.pr.size() > 1, "PR curve missing");
  for (const PrPoint& p : report.pr) {
    check.Expect(p.precision == 1.0, Fmt("precision below 1 at %.3g", p.confidence_threshold));
  }
  const double secs = Seconds(start);
  check.Expect(secs < 10.0, "runtime " + Fmt("%.1f s", secs));
  detail = std::to_string(imported.pairs.size()) + " pairs, " + std::to_string(records) +
           " records, " + std::to_string(report.pr.size()) + " PR thresholds, " + Fmt("%.2f s", secs);
  if (!check.ok()) detail += "; " + check.Summary();
  return check.ok();
}

// --- Metric oracles ---------------------------------------------------------------

double WilcoxonEnumerationP(const std::vector<double>& a, const std::vector<double>& b,
                                         double* w_plus) {
  std::vector<double> d;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  const size_t n = d.size();
  std::vector<double> rank(n);
  for (size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (size_t j = 0; j < n; ++j) {
      less += std::abs(d[j]) < std::abs(d[i]);
      equal += std::abs(d[j]) == std::abs(d[i]);
    }
    rank[i] = less + (equal + 1) / 2;
  }
  double total = 0;
  *w_plus = 0;
  for (size_t i = 0; i < n; ++i) {
    total += rank[i];
    if (d[i] > 0) *w_plus += rank[i];
  }
  const double observed = std::abs(*w_plus - total / 2);
  uint64_t extreme = 0;
  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
    double w = 0;
    for (size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) w += rank[i];
    }
    extreme += std::abs(w - total / 2) >= observed - 1e-9;
  }
  return static_cast<double>(extreme) / static_cast<double>(uint64_t{1} << n);
}

bool MetricOracles(std::string& detail) {
  Check check;
  std::mt19937_64 rng(1008);
  std::normal_distribution<double> offset(0.0, 0.04);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<double> thresholds = DefaultPckThresholds();
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 20 + rng() % 300;
    const CorrespondenceSet gt = testing::RandomCorrespondenceSet(rng, "s", "p", trial, n);
    // Predictions share the GT query pixels in shuffled order.
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    PredictionSet pred;
    pred.scene_id = "s";
    pred.plan_id = "p";
    pred.image_id = static_cast<uint32_t>(trial);
    std::vector<double> error(n), confidence(n);
    for (size_t k = 0; k < n; ++k) {
      const size_t i = order[k];
      const Correspondence& r = gt.records[i];
      const double gx = r.plan_xy.x() / gt.plan_width, gy = r.plan_xy.y() / gt.plan_height;
      const double px = gx + offset(rng), py = gy + offset(rng);
      confidence[i] = std::round(unit(rng) * 30) / 30;
      error[i] = std::hypot(px - gx, py - gy);
      pred.entries.push_back({r.photo_xy, {px, py}, confidence[i]});
    }
    const std::string tag = "instance " + std::to_string(trial);

    double sq = 0;
    for (double e : error) sq += e * e;
    check.Expect(Near(Rmse(pred, gt), std::sqrt(sq / n), 1e-12), tag + " RMSE");

    const std::vector<MatchedRecord> matched = MatchToGroundTruth(pred, gt);
    std::vector<double> errors;
    for (const MatchedRecord& m : matched) errors.push_back(m.error);
    const std::vector<PckPoint> pck = Pck(errors, thresholds);
    for (size_t t = 0; t < thresholds.size(); ++t) {
      double hits = 0;
      for (double e : error) hits += e <= thresholds[t];
      check.Expect(Near(pck[t].fraction, hits / n, 1e-12), tag + " PCK");
    }

    std::vector<double> levels = confidence;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    const std::vector<PrPoint> pr = PrCurve(pred, gt);
    check.Expect(pr.size() == levels.size(), tag + " PR size");
    for (size_t t = 0; t < std::min(pr.size(), levels.size()); ++t) {
      double emitted = 0, correct = 0;
      for (size_t i = 0; i < n; ++i) {
        if (confidence[i] >= levels[t]) {
          ++emitted;
          correct += error[i] < 0.05;
        }
      }
      const double precision = emitted == 0 ? 1.0 : correct / emitted;
      check.Expect(pr[t].confidence_threshold == levels[t] &&
                       Near(pr[t].precision, precision, 1e-12) &&
                       Near(pr[t].recall, correct / n, 1e-12),
                   tag + " PR");
    }
  }

  size_t wilcoxon_cases = 0;
  for (size_t n = 1; n <= 10; ++n) {
    for (int rep = 0; rep < 40; ++rep) {
      std::vector<double> a(n), b(n);
      for (size_t i = 0; i < n; ++i) {
        a[i] = static_cast<double>(rng() % 9);
        b[i] = static_cast<double>(rng() % 9);
      }
      if (a == b) continue;
      double oracle_w = 0;
      const double oracle_p = WilcoxonEnumerationP(a, b, &oracle_w);
      const WilcoxonResult r = WilcoxonSignedRank(a, b);
      ++wilcoxon_cases;
      check.Expect(r.exact && r.w_plus == oracle_w && Near(r.p_value, oracle_p, 1e-12),
                   "Wilcoxon n=" + std::to_string(n));
    }
  }
  const std::vector<double> five = {1, 2, 3, 4, 5}, zeros(5, 0.0);
  const WilcoxonResult example = WilcoxonSignedRank(five, zeros);
  check.Expect(example.w_plus == 15 && example.p_value == 0.0625, "worked Wilcoxon example");

  detail = "100 RMSE/PCK/PR instances, " + std::to_string(wilcoxon_cases) +
           " Wilcoxon enumerations (n <= 10), worked example W+=15 p=0.0625";
  if (!check.ok()) detail += "; " + check.Summary();
  return check.ok();
}

// --- Reported arithmetic ------------------------------------------------------------

bool ReportedArithmetic(std::string& detail) {
  Check check;
  const double ratio = ImprovementRatio(0.2901, 0.1919);
  check.Expect(ratio >= 0.335 && ratio <= 0.343, Fmt("ratio %.4f", ratio));
  check.Expect(Near(ratio, 1 - 0.1919 / 0.2901, 1e-15), "ratio formula");
  check.Expect(FormatPercent(ratio) == "34%", "percent string " + FormatPercent(ratio));
  check.Expect(kDefaultCorrectThreshold == 0.05, "default threshold");
  check.Expect(EvaluateOptions{}.correct_threshold == 0.05, "evaluate default threshold");
  // Strictly below the threshold counts as correct.
  const std::vector<MatchedRecord> edge = {{0.05, 1.0}, {0.0499, 1.0}};
  check.Expect(PrAt(edge, 0.5).precision == 0.5, "threshold strictness");
  detail = "improvement " + Fmt("%.4f", ratio) + " (" + FormatPercent(ratio) +
           "), correctness threshold " + Fmt("%.2f", kDefaultCorrectThreshold);
  if (!check.ok()) detail += "; " + check.Summary();
  return check.ok();
}

// --- Sourcing ---------------------------------------------------------------------------

double CosinesMeters(const GeoPoint& a, const GeoPoint& b) {
  const double r = kPi / 180;
  const double c = std::sin(a.lat * r) * std::sin(b.lat * r) +
                   std::cos(a.lat * r) * std::cos(b.lat * r) * std::cos((a.lon - b.lon) * r);
  return 6371008.8 * std::acos(std::clamp(c, -1.0, 1.0));
}

bool SourcingFilters(std::string& detail) {
  Check check;
  check.Expect(IsSceneOfInterest("castle"), "castle");
  check.Expect(IsSceneOfInterest("pagoda"), "pagoda");
  check.Expect(!IsSceneOfInterest("parking lot"), "parking lot");

  std::mt19937_64 rng(1009);
  std::uniform_real_distribution<double> lat(-89, 89), lon(-180, 180);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const GeoPoint a = GeoPoint::Make(lat(rng), lon(rng));
    const GeoPoint b = GeoPoint::Make(lat(rng), lon(rng));
    const double oracle = CosinesMeters(a, b);
    const double rel = std::abs(HaversineMeters(a, b) - oracle) / oracle;
    worst = std::max(worst, rel);
    check.Expect(rel <= 0.005, Fmt("relative gap %.3g", rel));
    // Radius decisions agree wherever the oracle is clear of the boundary.
    const double radius = oracle * std::exp(std::uniform_real_distribution<double>(-1, 1)(rng));
    if (std::abs(oracle - radius) > 0.005 * radius) {
      check.Expect(WithinRadius(a, b, radius) == (oracle <= radius), "radius decision");
    }
  }
  // Nearby pairs decided by the default radius.
  std::uniform_real_distribution<double> jitter(-0.0012, 0.0012);
  size_t near_checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const GeoPoint a = GeoPoint::Make(lat(rng) * 0.9, lon(rng));
    const GeoPoint b = GeoPoint::Make(a.lat + jitter(rng), a.lon + jitter(rng));
    const double oracle = CosinesMeters(a, b);
    if (std::abs(oracle - 50) <= 0.25) continue;
    ++near_checked;
    check.Expect(WithinRadius(a, b) == (oracle <= 50), Fmt("default radius at %.2f m", oracle));
  }
  check.Expect(kDefaultGeoRadiusMeters == 50.0, "default radius constant");
  detail = "3 category examples, 10000 random pairs (max relative gap " + Fmt("%.2g", worst) +
           "), " + std::to_string(near_checked) + " default-radius decisions";
  if (!check.ok()) detail += "; " + check.Summary();
  return check.ok();
}

// --- Durability ------------------------------------------------------------------------------

// Bitwise CRC-32 (reflected, polynomial 0xEDB88320).
uint32_t CrcOracle(const uint8_t* data, size_t n) {
  uint32_t crc = 0xFFFFFFFFu;
  for (size_t i = 0; i < n; ++i) {
    crc ^= data[i];
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

// Latest complete record per key, parsed from raw journal bytes.
std::map<std::string, json> ParseJournal(const std::vector<uint8_t>& bytes) {
  std::map<std::string, json> latest;
  size_t pos = 0;
  while (pos + 12 <= bytes.size()) {
    if (std::memcmp(&bytes[pos], "C3AJ", 4) != 0) break;
    uint32_t len, crc;
    std::memcpy(&len, &bytes[pos + 4], 4);
    if (pos + 12 + len > bytes.size()) break;
    std::memcpy(&crc, &bytes[pos + 8 + len], 4);
    if (crc != CrcOracle(&bytes[pos + 8], len)) break;
    const json j = json::parse(bytes.begin() + pos + 8, bytes.begin() + pos + 8 + len);
    latest[j.at("scene_id").get<std::string>()] = j;
    pos += 12 + len;
  }
  return latest;
}

std::string PutBody(int i) {
  json body = {{"similarity", {{"scale", 1.0 + i}, {"theta", 0.01 * i}, {"tx", i}, {"ty", -i}}},
               {"annotator", "writer"}};
  return body.dump();
}

std::string SceneOf(int i) { return "k" + std::to_string((i * 7) % 10); }

// Child body: 100 interleaved PUTs, one acknowledgement byte per stored PUT.
[[noreturn]] void WriterChild(const ServiceConfig& config, int ack_fd) {
  AlignService service(config);
  for (int i = 0; i < 100; ++i) {
    const HttpResponse r =
        service.Handle({"PUT", "/scenes/" + SceneOf(i) + "/alignments/c0/p0", {}, PutBody(i)});
    const char ack = r.status == 200 ? 1 : 0;
    if (write(ack_fd, &ack, 1) != 1) _exit(3);
  }
  for (;;) pause();
}

bool ServiceDurability(std::string& detail) {
  Check check;
  testing::TempDir dir;
  std::vector<testing::SyntheticScene> scenes;
  testing::SyntheticSceneOptions small;
  small.images = 3;
  small.points = 40;
  for (int k = 0; k < 10; ++k) {
    scenes.push_back(testing::MakeSyntheticScene(1010 + k, "k" + std::to_string(k), small));
  }
  testing::WriteSourceRoot(scenes, dir.path());

  std::mt19937_64 rng(1011);
  size_t runs = 0, torn_runs = 0;
  for (int kill_after : {0, 1, 13, 37, 50, 64, 88, 99, 100}) {
    ServiceConfig config;
    config.dataset_root = dir.path();
    config.journal = dir / ("journal" + std::to_string(kill_after) + ".log");
    config.clock = [] { return int64_t{1700000000}; };
    config.sync_writes = true;
    int fds[2];
    if (pipe(fds) != 0) return false;
    std::fflush(nullptr);
    const pid_t pid = fork();
    if (pid == 0) {
      close(fds[0]);
      WriterChild(config, fds[1]);
    }
    close(fds[1]);
    int acked = 0;
    char ack;
    while (acked < kill_after && read(fds[0], &ack, 1) == 1) {
      check.Expect(ack == 1, "PUT rejected in child");
      ++acked;
    }
    // Let a few more writes race the kill.
    usleep(static_cast<useconds_t>(rng() % 2000));
    kill(pid, SIGKILL);
    waitpid(pid, nullptr, 0);
    close(fds[0]);
    ++runs;

    std::vector<uint8_t> bytes;
    if (fs::exists(config.journal)) bytes = ReadFileBytes(config.journal);
    // Also tear the last frame by hand on alternate runs.
    if (runs % 2 == 0 && bytes.size() > 20) {
      const std::vector<uint8_t> extra = EncodeJournalRecord(AlignmentRecordFromJson(
          {{"scene_id", "k0"}, {"component_id", "c0"}, {"plan_id", "p0"},
           {"similarity", {{"scale", 99.0}, {"theta", 0.0}, {"tx", 0.0}, {"ty", 0.0}}},
           {"annotator", "torn"}, {"timestamp", 1}, {"version", 1000}}));
      bytes.insert(bytes.end(), extra.begin(), extra.begin() + extra.size() / 2);
      WriteFileAtomic(config.journal, bytes);
      ++torn_runs;
    }
    const std::map<std::string, json> oracle = ParseJournal(bytes);

    // Versions each key must have reached from the acknowledged PUTs.
    std::map<std::string, uint64_t> acked_version;
    for (int i = 0; i < acked; ++i) ++acked_version[SceneOf(i)];

    AlignService replayed(config);
    for (int k = 0; k < 10; ++k) {
      const std::string scene = "k" + std::to_string(k);
      const HttpResponse got = replayed.Handle({"GET", "/scenes/" + scene + "/alignments/c0/p0", {}, ""});
      const std::string tag = "kill@" + std::to_string(kill_after) + " " + scene;
      auto it = oracle.find(scene);
      if (it == oracle.end()) {
        check.Expect(got.status == 404, tag + " should be absent");
        check.Expect(acked_version[scene] == 0, tag + " lost an acknowledged PUT");
        continue;
      }
      if (got.status != 200) {
        check.Expect(false, tag + " status " + std::to_string(got.status));
        continue;
      }
      const json served = json::parse(got.body);
      const json& expect = it->second;
      check.Expect(served["version"] == expect["version"], tag + " version");
      check.Expect(served["similarity"]["scale"] == expect["similarity"]["scale"], tag + " scale");
      check.Expect(served["version"].get<uint64_t>() >= acked_version[scene],
                   tag + " lost an acknowledged PUT");
    }

    if (oracle.empty()) continue;
    // Conflicts are deterministic: a stale expected_version gets the same 409 twice.
    const auto& [scene, record] = *oracle.begin();
    const uint64_t current = record["version"].get<uint64_t>();
    const std::string path = "/scenes/" + scene + "/alignments/c0/p0";
    json stale = json::parse(PutBody(7));
    stale["expected_version"] = current - 1;
    const HttpResponse c1 = replayed.Handle({"PUT", path, {}, stale.dump()});
    const HttpResponse c2 = replayed.Handle({"PUT", path, {}, stale.dump()});
    check.Expect(c1.status == 409 && c2.status == 409 && c1.body == c2.body, "conflict not deterministic");
    check.Expect(json::parse(c1.body).value("current_version", uint64_t{0}) == current,
                 "conflict current_version");
    json fresh = json::parse(PutBody(8));
    fresh["expected_version"] = current;
    const HttpResponse ok = replayed.Handle({"PUT", path, {}, fresh.dump()});
    check.Expect(ok.status == 200 && json::parse(ok.body)["version"] == current + 1,
                 "PUT at current version");
  }
  detail = std::to_string(runs) + " kill-and-replay runs (" + std::to_string(torn_runs) +
           " with a hand-torn tail), 100 PUTs over 10 keys";
  if (!check.ok()) detail += "; " + check.Summary();
  return check.ok();
}

}  // namespace
}  // namespace c3

int main() {
  struct Criterion {
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"parser_round_trip", c3::ParserRoundTrip},
      {"projection_oracle", c3::ProjectionOracle},
      {"transform_recovery", c3::TransformRecovery},
      {"end_to_end_pipeline", c3::EndToEnd},
      {"metric_oracles", c3::MetricOracles},
      {"reported_arithmetic", c3::ReportedArithmetic},
      {"sourcing_filters", c3::SourcingFilters},
      {"service_durability", c3::ServiceDurability},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", c.name, detail.c_str());
    std::fflush(stdout);
    failed += !ok;
  }
  return failed == 0 ? 0 : 1;
}
