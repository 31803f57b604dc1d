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

// c3: command-line entry point over the c3kit library.
//
// Exit status: 0 success, 1 usage error, 2 data error (JSON error on stderr).

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "c3/align_service.h"
#include "c3/colmap_io.h"
#include "c3/correspondence.h"
#include "c3/dataset.h"
#include "c3/error.h"
#include "c3/json_convert.h"
#include "c3/metrics.h"
#include "c3/sourcing.h"
#include "c3/util.h"
#include "image_io.h"
#include "json.hpp"

namespace c3 {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum class OutputFormat { kTable, kTsv, kJson };

struct GlobalFlags {
  OutputFormat format = OutputFormat::kTable;
  uint64_t seed = 0;
  int jobs = 1;
  bool verbose = false;
};

// --- Output -----------------------------------------------------------------

std::string HumanCell(const json& v) {
  if (v.is_number_float()) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v.get<double>());
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "-";
  return v.dump();
}

std::string MachineCell(const json& v) {
  if (v.is_number_float()) return FormatDouble(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

struct Field {
  std::string key;
  std::string label;
  json value;
};

void EmitFields(const std::vector<Field>& fields, OutputFormat format,
                json extra = json::object()) {
  if (format == OutputFormat::kJson) {
    json out = json::object();
    for (const Field& f : fields) out[f.key] = f.value;
    for (auto& [k, v] : extra.items()) out[k] = v;
    std::cout << out.dump(2) << "\n";
    return;
  }
  size_t width = 0;
  for (const Field& f : fields) width = std::max(width, f.label.size());
  for (const Field& f : fields) {
    if (format == OutputFormat::kTsv) {
      std::cout << f.key << "\t" << MachineCell(f.value) << "\n";
    } else {
      std::cout << f.label << std::string(width - f.label.size() + 2, ' ')
                << HumanCell(f.value) << "\n";
    }
  }
}

void EmitTable(const std::vector<std::string>& columns, const std::vector<std::vector<json>>& rows,
               OutputFormat format) {
  if (format == OutputFormat::kJson) {
    json out = json::array();
    for (const auto& row : rows) {
      json obj = json::object();
      for (size_t i = 0; i < columns.size(); ++i) obj[columns[i]] = row[i];
      out.push_back(std::move(obj));
    }
    std::cout << out.dump(2) << "\n";
    return;
  }
  if (format == OutputFormat::kTsv) {
    for (size_t i = 0; i < columns.size(); ++i) std::cout << (i ? "\t" : "") << columns[i];
    std::cout << "\n";
    for (const auto& row : rows) {
      for (size_t i = 0; i < row.size(); ++i) std::cout << (i ? "\t" : "") << MachineCell(row[i]);
      std::cout << "\n";
    }
    return;
  }
  std::vector<size_t> widths;
  for (const std::string& c : columns) widths.push_back(c.size());
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows) {
    std::vector<std::string> line;
    for (size_t i = 0; i < row.size(); ++i) {
      line.push_back(HumanCell(row[i]));
      widths[i] = std::max(widths[i], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  auto print = [&](const std::vector<std::string>& line) {
    for (size_t i = 0; i < line.size(); ++i) {
      std::cout << line[i];
      if (i + 1 < line.size()) std::cout << std::string(widths[i] - line[i].size() + 2, ' ');
    }
    std::cout << "\n";
  };
  print(columns);
  for (const auto& line : cells) print(line);
}

// Runs fn(i) for i in [0, n) on `jobs` threads; the first error is rethrown.
template <typename Fn>
void ParallelFor(size_t n, int jobs, Fn fn) {
  const size_t workers = std::min<size_t>(std::max(jobs, 1), std::max<size_t>(n, 1));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mutex;
  std::exception_ptr error;
  {
    std::vector<std::jthread> threads;
    for (size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

// --- Subcommands --------------------------------------------------------------

struct InspectArgs {
  std::string model_dir;
  std::string model_format = "auto";
};

void RunInspect(const InspectArgs& a, const GlobalFlags& g) {
  const ModelFormat requested = a.model_format == "binary" ? ModelFormat::kBinary
                                : a.model_format == "text" ? ModelFormat::kText
                                                           : ModelFormat::kAuto;
  const ModelFormat detected =
      requested == ModelFormat::kAuto ? DetectModelFormat(a.model_dir) : requested;
  const SparseModel model = ReadModel(a.model_dir, detected);
  uint64_t observations = 0;
  uint64_t track_total = 0;
  double error_total = 0.0;
  for (const auto& [id, image] : model.images) observations += image.observations.size();
  for (const auto& [id, point] : model.points) {
    track_total += point.track.size();
    error_total += point.error;
  }
  std::map<std::string, uint64_t> camera_models;
  for (const auto& [id, camera] : model.cameras) {
    const std::string name = camera.supported()             ? std::string(CameraModelName(camera.model))
                             : !camera.raw_model_name.empty() ? camera.raw_model_name
                                                              : "model " + std::to_string(camera.raw_model_id);
    ++camera_models[name];
  }
  json models = json::object();
  for (const auto& [name, count] : camera_models) models[name] = count;
  const double n_points = static_cast<double>(model.points.size());
  EmitFields(
      {{"format", "format", detected == ModelFormat::kBinary ? "binary" : "text"},
       {"cameras", "cameras", model.cameras.size()},
       {"images", "images", model.images.size()},
       {"points", "points", model.points.size()},
       {"observations", "observations", observations},
       {"mean_track_length", "mean track length",
        model.points.empty() ? json(nullptr) : json(track_total / n_points)},
       {"mean_reprojection_error", "mean reprojection error",
        model.points.empty() ? json(nullptr) : json(error_total / n_points)},
       {"camera_models", "camera models", models}},
      g.format);
}

struct ServeArgs {
  std::string root;
  std::string journal;
  std::string host = "127.0.0.1";
  int port = 8080;
};

void RunServe(const ServeArgs& a, const GlobalFlags& g) {
  ServiceConfig config;
  config.dataset_root = a.root;
  config.journal = a.journal;
  AlignService service(config);
  if (g.verbose) std::cerr << "serving " << a.root << " on " << a.host << ":" << a.port << "\n";
  if (!service.Serve(a.host, a.port)) {
    Fail(ErrorCode::kIoError, "cannot listen on " + a.host + ":" + std::to_string(a.port));
  }
}

struct DeriveArgs {
  std::string root;
  std::string out;
  std::string photo_source = "reproject";
  double max_reproj_error = 4.0;
  bool no_clip = false;
  std::vector<std::string> scenes;
};

void RunDerive(const DeriveArgs& a, const GlobalFlags& g) {
  std::vector<SceneManifest> scenes = ImportManifest(a.root);
  if (!a.scenes.empty()) {
    std::erase_if(scenes, [&](const SceneManifest& s) {
      return std::find(a.scenes.begin(), a.scenes.end(), s.scene_id) == a.scenes.end();
    });
  }
  std::sort(scenes.begin(), scenes.end(),
            [](const auto& x, const auto& y) { return x.scene_id < y.scene_id; });
  DeriveOptions options;
  options.photo_source =
      a.photo_source == "observed" ? PhotoSource::kObserved : PhotoSource::kReproject;
  options.max_reproj_error_px = a.max_reproj_error;
  options.clip_to_plan = !a.no_clip;

  struct SceneResult {
    std::vector<CorrespondenceSet> sets;
    std::vector<json> skipped;
  };
  std::vector<SceneResult> results(scenes.size());
  ParallelFor(scenes.size(), g.jobs, [&](size_t i) {
    const SceneManifest& scene = scenes[i];
    std::map<std::string, SparseModel> models;
    std::vector<PlanAlignment> alignments = scene.alignments;
    std::sort(alignments.begin(), alignments.end(), [](const auto& x, const auto& y) {
      return std::tie(x.plan_id, x.component_id) < std::tie(y.plan_id, y.component_id);
    });
    for (const PlanAlignment& alignment : alignments) {
      auto it = models.find(alignment.component_id);
      if (it == models.end()) {
        const ReconstructionComponent* c = scene.FindComponent(alignment.component_id);
        it = models.emplace(alignment.component_id, ReadModel(fs::path(a.root) / c->model_path))
                 .first;
      }
      SceneDerivation d = DeriveScene(it->second, alignment, options, scene.scene_id);
      for (CorrespondenceSet& set : d.sets) results[i].sets.push_back(std::move(set));
      for (const DeriveSkip& skip : d.skipped) {
        results[i].skipped.push_back({{"scene_id", scene.scene_id},
                                      {"plan_id", alignment.plan_id},
                                      {"component_id", alignment.component_id},
                                      {"image_id", skip.image_id},
                                      {"reason", ErrorCodeName(skip.code)}});
      }
    }
  });

  Dataset dataset;
  dataset.scenes = scenes;
  std::vector<std::vector<json>> rows;
  json skipped = json::array();
  for (size_t i = 0; i < scenes.size(); ++i) {
    uint64_t records = 0;
    for (const CorrespondenceSet& set : results[i].sets) records += set.records.size();
    rows.push_back({scenes[i].scene_id, results[i].sets.size(), records,
                    results[i].skipped.size()});
    for (json& s : results[i].skipped) skipped.push_back(std::move(s));
    for (CorrespondenceSet& set : results[i].sets) dataset.pairs.push_back(std::move(set));
  }
  dataset.Canonicalize();
  for (size_t i = 1; i < dataset.pairs.size(); ++i) {
    const CorrespondenceSet& p = dataset.pairs[i - 1];
    const CorrespondenceSet& q = dataset.pairs[i];
    if (p.scene_id == q.scene_id && p.plan_id == q.plan_id && p.image_id == q.image_id) {
      Fail(ErrorCode::kValidationError,
           "image " + std::to_string(q.image_id) + " of scene '" + q.scene_id +
               "' is paired with plan '" + q.plan_id + "' by two components");
    }
  }
  ExportDataset(dataset, a.out, {a.root, g.jobs});
  if (g.format == OutputFormat::kJson) {
    json out = {{"scenes", json::array()}, {"skipped", skipped}};
    for (const auto& row : rows) {
      out["scenes"].push_back(
          {{"scene_id", row[0]}, {"pairs", row[1]}, {"records", row[2]}, {"skipped", row[3]}});
    }
    std::cout << out.dump(2) << "\n";
  } else {
    EmitTable({"scene_id", "pairs", "records", "skipped"}, rows, g.format);
  }
}

struct ExportArgs {
  std::string dataset;
  std::string out;
  std::string predictions_out;
  bool binary = false;
};

void RunExport(const ExportArgs& a, const GlobalFlags& g) {
  if (a.out.empty() && a.predictions_out.empty()) {
    Fail(ErrorCode::kInvalidArgument, "export needs --out and/or --predictions-out");
  }
  const Dataset dataset = ImportDataset(a.dataset);
  if (!a.out.empty()) ExportDataset(dataset, a.out, {a.dataset, g.jobs});
  if (!a.predictions_out.empty()) {
    ParallelFor(dataset.pairs.size(), g.jobs, [&](size_t i) {
      WritePredictionFile(a.predictions_out, GroundTruthAsPredictions(dataset.pairs[i]),
                          a.binary);
    });
  }
  EmitFields({{"scenes", "scenes", dataset.scenes.size()},
              {"pairs", "pairs", dataset.pairs.size()}},
             g.format);
}

void RunStats(const std::string& root, const GlobalFlags& g) {
  const DatasetStats s = ComputeStats(ImportDataset(root));
  const auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  EmitFields({{"scenes", "scenes", s.scene_count},
              {"plans", "plans", s.plan_count},
              {"photos", "photos", s.photo_count},
              {"poses", "poses", s.pose_count},
              {"pairs", "pairs", s.pair_count},
              {"correspondences", "correspondences", s.total_correspondences},
              {"min_per_pair", "min per pair", opt(s.min_per_pair)},
              {"max_per_pair", "max per pair", opt(s.max_per_pair)},
              {"mean_per_pair", "mean per pair", opt(s.mean_per_pair)}},
             g.format);
}

struct SplitArgs {
  std::string dataset;
  double test_fraction = 0.2;
  std::vector<std::string> overrides;
  bool write = false;
};

void RunSplit(const SplitArgs& a, const GlobalFlags& g) {
  std::vector<SceneManifest> scenes = ImportManifest(a.dataset);
  SplitOptions options;
  options.seed = g.seed;
  options.test_fraction = a.test_fraction;
  for (const std::string& o : a.overrides) {
    const size_t eq = o.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorCode::kInvalidArgument, "override must be SCENE=train|test, got '" + o + "'");
    }
    options.overrides[o.substr(0, eq)] = ParseSplit(o.substr(eq + 1));
  }
  const std::map<std::string, Split> assignment = SplitScenes(scenes, options);
  std::vector<std::vector<json>> rows;
  for (const auto& [scene, split] : assignment) rows.push_back({scene, SplitName(split)});
  if (a.write) {
    for (SceneManifest& s : scenes) s.split = assignment.at(s.scene_id);
    WriteManifest(scenes, a.dataset);
  }
  EmitTable({"scene_id", "split"}, rows, g.format);
}

struct AugmentArgs {
  std::string dataset;
  std::string scene;
  std::string plan;
  uint32_t image = 0;
  std::string out;
  std::string rotation = "none";
  double max_rotation = 180.0;
  std::optional<double> crop_fraction;
  std::vector<int> crop;
  double brightness = 0.0;
  double contrast = 0.0;
  double saturation = 0.0;
};

RotationChoice ParseRotation(const std::string& s) {
  if (s == "none" || s == "0") return RotationChoice::kNone;
  if (s == "90") return RotationChoice::kCcw90;
  if (s == "180") return RotationChoice::kCcw180;
  if (s == "270") return RotationChoice::kCcw270;
  if (s == "random") return RotationChoice::kRandomRightAngle;
  return RotationChoice::kArbitrary;
}

void RunAugment(const AugmentArgs& a, const GlobalFlags& g) {
  const Dataset dataset = ImportDataset(a.dataset);
  const SceneManifest* scene = dataset.FindScene(a.scene);
  if (!scene) Fail(ErrorCode::kNotFound, "unknown scene '" + a.scene + "'");
  const FloorPlan* plan = scene->FindPlan(a.plan);
  if (!plan) Fail(ErrorCode::kNotFound, "unknown plan '" + a.plan + "'");
  const auto it = std::find_if(dataset.pairs.begin(), dataset.pairs.end(), [&](const auto& p) {
    return p.scene_id == a.scene && p.plan_id == a.plan && p.image_id == a.image;
  });
  if (it == dataset.pairs.end()) {
    Fail(ErrorCode::kNotFound, "no pair " + a.scene + "/" + a.plan + "/" + std::to_string(a.image));
  }
  AugmentParams params;
  params.jitter = {a.brightness, a.contrast, a.saturation};
  if (!a.crop.empty()) params.crop_rect = CropRect{a.crop[0], a.crop[1], a.crop[2], a.crop[3]};
  params.crop_fraction = a.crop_fraction;
  params.rotation = ParseRotation(a.rotation);
  params.max_rotation_deg = a.max_rotation;
  const AugmentResult result =
      AugmentPlan(tools::LoadImage(fs::path(a.dataset) / plan->path), *it, params, g.seed);

  fs::create_directories(a.out);
  tools::SaveImage(fs::path(a.out) / "plan.png", result.image);
  WriteFileAtomic(fs::path(a.out) / "records.c3c", EncodePairBlob(result.records.records));
  json pose = ToJson(result.records.plan_pose);
  const std::vector<Field> fields = {
      {"width", "width", result.image.width},
      {"height", "height", result.image.height},
      {"records", "records", result.records.records.size()},
      {"rotation_deg", "rotation (deg)", result.rotation_deg},
      {"pose", "pose", pose}};
  json summary = json::object();
  for (const Field& f : fields) summary[f.key] = f.value;
  WriteFileAtomic(fs::path(a.out) / "augment.json", summary.dump(2) + "\n");
  EmitFields(fields, g.format);
}

struct EvalArgs {
  std::string dataset;
  std::string pred;
  std::vector<std::string> baselines;
  std::string split = "test";
  bool allow_missing = false;
  double correct_threshold = kDefaultCorrectThreshold;
  std::vector<double> pck_thresholds;
  bool per_pair = false;
};

void RunEval(const EvalArgs& a, const GlobalFlags& g) {
  EvaluateOptions options;
  options.split = a.split == "all"     ? SplitFilter::kAll
                  : a.split == "train" ? SplitFilter::kTrain
                                       : SplitFilter::kTest;
  options.allow_missing = a.allow_missing;
  options.correct_threshold = a.correct_threshold;
  options.jobs = g.jobs;
  if (!a.pck_thresholds.empty()) options.pck_thresholds = a.pck_thresholds;
  for (const std::string& b : a.baselines) {
    const size_t eq = b.find('=');
    if (eq == std::string::npos || eq == 0) {
      Fail(ErrorCode::kInvalidArgument, "baseline must be NAME=DIR, got '" + b + "'");
    }
    options.baselines[b.substr(0, eq)] = b.substr(eq + 1);
  }
  const MetricReport report = Evaluate(ImportDataset(a.dataset), a.pred, options);

  std::vector<Field> fields = {
      {"pairs_scored", "pairs scored", report.per_pair.size()},
      {"pairs_expected", "pairs expected", report.expected_pairs},
      {"pairs_failed", "pairs failed", report.failures.size()},
      {"aggregate_rmse", "aggregate RMSE", report.aggregate_rmse},
      {"pooled_rmse", "pooled RMSE", report.pooled_rmse},
  };
  for (const PckPoint& p : report.pck) {
    char key[32];
    std::snprintf(key, sizeof(key), "pck@%.2f", p.threshold);
    fields.push_back({key, std::string("PCK ") + (key + 4), p.fraction});
  }
  fields.push_back({"pr_available", "PR available", report.pr_available});
  for (const BaselineComparison& c : report.comparisons) {
    const std::string k = "baseline." + c.name + ".";
    fields.push_back({k + "rmse", c.name + " RMSE", c.baseline_rmse});
    fields.push_back({k + "improvement", c.name + " improvement", FormatPercent(c.improvement)});
    fields.push_back({k + "p_value", c.name + " Wilcoxon p",
                      c.test ? json(c.test->p_value) : json(nullptr)});
  }
  json extra = json::object();
  if (g.format == OutputFormat::kJson) {
    json pr = json::array();
    for (const PrPoint& p : report.pr) {
      pr.push_back({{"confidence", p.confidence_threshold},
                    {"precision", p.precision},
                    {"recall", p.recall}});
    }
    json failures = json::array();
    for (const PairFailure& f : report.failures) {
      failures.push_back({{"pair", f.key.ToString()},
                          {"code", ErrorCodeName(f.code)},
                          {"message", f.message}});
    }
    extra["pr"] = pr;
    extra["failures"] = failures;
    if (a.per_pair) {
      json pairs = json::array();
      for (const PairMetric& m : report.per_pair) {
        pairs.push_back({{"pair", m.key.ToString()}, {"records", m.records}, {"rmse", m.rmse}});
      }
      extra["per_pair"] = pairs;
    }
  }
  EmitFields(fields, g.format, extra);
  if (a.per_pair && g.format != OutputFormat::kJson) {
    std::vector<std::vector<json>> rows;
    for (const PairMetric& m : report.per_pair) rows.push_back({m.key.ToString(), m.records, m.rmse});
    std::cout << "\n";
    EmitTable({"pair", "records", "rmse"}, rows, g.format);
  }
}

struct FilterCategoriesArgs {
  std::string input;
  std::string categories;
  std::string rules;
  bool all = false;
};

void RunFilterCategories(const FilterCategoriesArgs& a, const GlobalFlags& g) {
  const SceneCategories categories =
      a.categories.empty() ? SceneCategories::Default() : SceneCategories::Load(a.categories);
  const NameStripRules rules =
      a.rules.empty() ? NameStripRules::Default() : NameStripRules::Load(a.rules);
  const std::vector<uint8_t> bytes = ReadFileBytes(a.input);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<std::vector<json>> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = TrimWhitespace(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      Fail(ErrorCode::kMalformedText, a.input + ":" + std::to_string(line_no) +
                                          ": expected '<tag>\\t<scene type>'");
    }
    const std::string tag(TrimWhitespace(std::string_view(line).substr(0, tab)));
    const std::string type(TrimWhitespace(std::string_view(line).substr(tab + 1)));
    const std::string name = InferSceneName(tag, rules);
    const bool accepted = !name.empty() && IsSceneOfInterest(type, categories);
    if (accepted || a.all) rows.push_back({tag, name, type, accepted});
  }
  if (a.all) {
    EmitTable({"tag", "name", "scene_type", "accepted"}, rows, g.format);
  } else {
    for (auto& row : rows) row.pop_back();
    EmitTable({"tag", "name", "scene_type"}, rows, g.format);
  }
}

struct GeoFilterArgs {
  std::string photos;
  double lat = 0.0;
  double lon = 0.0;
  double radius = kDefaultGeoRadiusMeters;
};

void RunGeoFilter(const GeoFilterArgs& a, const GlobalFlags& g) {
  if (!(a.radius > 0)) Fail(ErrorCode::kInvalidArgument, "--radius must be positive");
  const GeoPoint center = GeoPoint::Make(a.lat, a.lon);
  std::vector<std::vector<json>> rows;
  for (const GeotaggedPhoto& p : FilterByRadius(LoadGeotaggedPhotos(a.photos), center, a.radius)) {
    rows.push_back({p.photo_id, p.location.lat, p.location.lon,
                    HaversineMeters(center, p.location), p.url});
  }
  EmitTable({"photo_id", "lat", "lon", "distance_m", "url"}, rows, g.format);
}

bool IsUserError(ErrorCode code) { return code == ErrorCode::kInvalidArgument; }

int Main(int argc, char** argv) {
  CLI::App app{"Floor-plan/photo correspondence toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("-c,--config", "", "TOML config merged under command-line flags");

  GlobalFlags g;
  const std::map<std::string, OutputFormat> formats = {
      {"table", OutputFormat::kTable}, {"tsv", OutputFormat::kTsv}, {"json", OutputFormat::kJson}};
  app.add_option("-f,--format", g.format, "Output format: table, tsv or json")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  app.add_option("-s,--seed", g.seed, "Seed for every random choice");
  app.add_option("-j,--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "Print the resolved configuration to stderr");

  InspectArgs inspect;
  CLI::App* inspect_cmd = app.add_subcommand("inspect", "Summarize a sparse model");
  inspect_cmd->add_option("model_dir", inspect.model_dir)->required()->check(CLI::ExistingDirectory);
  inspect_cmd->add_option("--model-format", inspect.model_format)
      ->check(CLI::IsMember({"auto", "binary", "text"}));

  ServeArgs serve;
  CLI::App* serve_cmd = app.add_subcommand("align-serve", "Run the alignment HTTP service");
  serve_cmd->add_option("-r,--root", serve.root, "Dataset root")
      ->envname("C3_ROOT")->required()->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--journal", serve.journal, "Alignment journal path")->envname("C3_JOURNAL");
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("-p,--port", serve.port, "Port")->check(CLI::Range(1, 65535));

  DeriveArgs derive;
  CLI::App* derive_cmd = app.add_subcommand("derive", "Derive correspondences into a dataset");
  derive_cmd->add_option("-r,--root", derive.root, "Source root holding manifest.json")
      ->envname("C3_ROOT")->required()->check(CLI::ExistingDirectory);
  derive_cmd->add_option("-o,--out", derive.out, "Output dataset directory")->required();
  derive_cmd->add_option("--photo-source", derive.photo_source)
      ->check(CLI::IsMember({"reproject", "observed"}));
  derive_cmd->add_option("--max-reproj-error", derive.max_reproj_error, "Pixels")
      ->check(CLI::NonNegativeNumber);
  derive_cmd->add_flag("--no-clip", derive.no_clip, "Keep records outside the plan");
  derive_cmd->add_option("--scene", derive.scenes, "Restrict to these scenes");

  ExportArgs exp;
  CLI::App* export_cmd = app.add_subcommand("export", "Copy a dataset or write GT predictions");
  export_cmd->add_option("-d,--dataset", exp.dataset)
      ->envname("C3_ROOT")->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("-o,--out", exp.out, "Destination dataset directory");
  export_cmd->add_option("--predictions-out", exp.predictions_out,
                         "Write ground truth as prediction files here");
  export_cmd->add_flag("--binary", exp.binary, "Binary prediction files");

  std::string stats_root;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
  stats_cmd->add_option("-d,--dataset", stats_root)
      ->envname("C3_ROOT")->required()->check(CLI::ExistingDirectory);

  SplitArgs split;
  CLI::App* split_cmd = app.add_subcommand("split", "Assign scenes to train/test");
  split_cmd->add_option("-d,--dataset", split.dataset)
      ->envname("C3_ROOT")->required()->check(CLI::ExistingDirectory);
  split_cmd->add_option("--test-fraction", split.test_fraction)->check(CLI::Range(0.0, 1.0));
  split_cmd->add_option("--override", split.overrides, "SCENE=train|test");
  split_cmd->add_flag("--write", split.write, "Store the assignment in manifest.json");

  AugmentArgs aug;
  CLI::App* aug_cmd = app.add_subcommand("augment", "Augment one plan with its records");
  aug_cmd->add_option("-d,--dataset", aug.dataset)
      ->envname("C3_ROOT")->required()->check(CLI::ExistingDirectory);
  aug_cmd->add_option("--scene", aug.scene)->required();
  aug_cmd->add_option("--plan", aug.plan)->required();
  aug_cmd->add_option("--image", aug.image)->required();
  aug_cmd->add_option("-o,--out", aug.out)->required();
  aug_cmd->add_option("--rotation", aug.rotation)
      ->check(CLI::IsMember({"none", "0", "90", "180", "270", "random", "arbitrary"}));
  aug_cmd->add_option("--max-rotation", aug.max_rotation, "Degrees, for arbitrary rotation");
  CLI::Option* crop_fraction =
      aug_cmd->add_option("--crop-fraction", aug.crop_fraction)->check(CLI::Range(0.0, 1.0));
  CLI::Option* crop = aug_cmd->add_option("--crop", aug.crop, "x0 y0 x1 y1")->expected(4);
  crop->excludes(crop_fraction);
  aug_cmd->add_option("--brightness", aug.brightness)->check(CLI::Range(0.0, 1.0));
  aug_cmd->add_option("--contrast", aug.contrast)->check(CLI::Range(0.0, 1.0));
  aug_cmd->add_option("--saturation", aug.saturation)->check(CLI::Range(0.0, 1.0));

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score predictions against a dataset");
  eval_cmd->add_option("-d,--dataset", eval.dataset)
      ->envname("C3_ROOT")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("-p,--pred", eval.pred, "Predictions root")
      ->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--baseline", eval.baselines, "NAME=DIR, compared by signed-rank test");
  eval_cmd->add_option("--split", eval.split)->check(CLI::IsMember({"test", "train", "all"}));
  eval_cmd->add_flag("--allow-missing", eval.allow_missing,
                     "Report unscored pairs instead of failing");
  eval_cmd->add_option("--correct-threshold", eval.correct_threshold)
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--pck-thresholds", eval.pck_thresholds)->delimiter(',');
  eval_cmd->add_flag("--per-pair", eval.per_pair, "Also list per-pair RMSE");

  CLI::App* source_cmd = app.add_subcommand("source", "Scene sourcing filters");
  source_cmd->require_subcommand(1);
  FilterCategoriesArgs fc;
  CLI::App* fc_cmd =
      source_cmd->add_subcommand("filter-categories", "Keep tags naming scenes of interest");
  fc_cmd->add_option("-i,--input", fc.input, "Lines '<tag>\\t<scene type>'")
      ->required()->check(CLI::ExistingFile);
  fc_cmd->add_option("--categories", fc.categories)->check(CLI::ExistingFile);
  fc_cmd->add_option("--rules", fc.rules)->check(CLI::ExistingFile);
  fc_cmd->add_flag("--all", fc.all, "List rejected tags too");
  GeoFilterArgs gf;
  CLI::App* gf_cmd = source_cmd->add_subcommand("geo-filter", "Keep photos near a point");
  gf_cmd->add_option("--photos", gf.photos, "photo_id,lat,lon,url rows")
      ->required()->check(CLI::ExistingFile);
  gf_cmd->add_option("--lat", gf.lat)->required()->check(CLI::Range(-90.0, 90.0));
  gf_cmd->add_option("--lon", gf.lon)->required()->check(CLI::Range(-180.0, 180.0));
  gf_cmd->add_option("--radius", gf.radius, "Meters")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (g.verbose) std::cerr << app.config_to_str(true, false);

  try {
    if (inspect_cmd->parsed()) RunInspect(inspect, g);
    else if (serve_cmd->parsed()) RunServe(serve, g);
    else if (derive_cmd->parsed()) RunDerive(derive, g);
    else if (export_cmd->parsed()) RunExport(exp, g);
    else if (stats_cmd->parsed()) RunStats(stats_root, g);
    else if (split_cmd->parsed()) RunSplit(split, g);
    else if (aug_cmd->parsed()) RunAugment(aug, g);
    else if (eval_cmd->parsed()) RunEval(eval, g);
    else if (fc_cmd->parsed()) RunFilterCategories(fc, g);
    else if (gf_cmd->parsed()) RunGeoFilter(gf, g);
  } catch (const Error& e) {
    if (IsUserError(e.code())) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    json err = {{"error", ErrorCodeName(e.code())}, {"message", e.what()},
                {"details", e.details()}};
    std::cerr << json::array({err}).dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    json err = {{"error", "IoError"}, {"message", e.what()}, {"details", json::array()}};
    std::cerr << json::array({err}).dump() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace
}  // namespace c3

int main(int argc, char** argv) { return c3::Main(argc, argv); }
