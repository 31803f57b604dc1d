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

#include "c3/dataset.h"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <set>
#include <thread>

#include "c3/error.h"
#include "c3/json_convert.h"
#include "c3/util.h"

namespace c3 {
namespace {

using nlohmann::json;

constexpr char kBlobMagic[4] = {'C', '3', 'D', 'S'};

bool IsSafeId(const std::string& id) {
  return !id.empty() && id != "." && id != ".." &&
         id.find_first_of("/\\ \t\r\n") == std::string::npos;
}

template <typename T>
void Append(std::vector<uint8_t>& out, const T& value) {
  const auto* p = reinterpret_cast<const uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T Load(const uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

std::filesystem::path PairPath(const std::filesystem::path& root,
                               const std::string& scene_id,
                               const std::string& plan_id, uint32_t image_id) {
  return root / "scenes" / scene_id / "pairs" / plan_id /
         (std::to_string(image_id) + ".c3c");
}

json SceneToJson(const SceneManifest& scene,
                 const std::vector<const CorrespondenceSet*>& sets) {
  json plans = json::array();
  for (const FloorPlan& plan : scene.floor_plans) {
    plans.push_back({{"plan_id", plan.plan_id},
                     {"path", plan.path},
                     {"width", plan.width},
                     {"height", plan.height},
                     {"accepted", plan.accepted}});
  }
  json components = json::array();
  for (const ReconstructionComponent& c : scene.components) {
    components.push_back(
        {{"component_id", c.component_id}, {"model_path", c.model_path}});
  }
  json alignments = json::array();
  for (const PlanAlignment& a : scene.alignments) alignments.push_back(ToJson(a));
  json pairs = json::array();
  if (!sets.empty()) {
    for (const CorrespondenceSet* set : sets) {
      pairs.push_back({{"plan_id", set->plan_id},
                       {"image_id", set->image_id},
                       {"photo_width", set->photo_width},
                       {"photo_height", set->photo_height},
                       {"plan_width", set->plan_width},
                       {"plan_height", set->plan_height},
                       {"records", set->records.size()}});
    }
  } else {
    for (const PairRef& ref : scene.pairs) {
      pairs.push_back({{"plan_id", ref.plan_id}, {"image_id", ref.image_id}});
    }
  }
  json out = {{"scene_id", scene.scene_id},
              {"name", scene.name},
              {"geo", nullptr},
              {"external_link", scene.external_link},
              {"split", SplitName(scene.split)},
              {"floor_plans", plans},
              {"components", components},
              {"alignments", alignments},
              {"pairs", pairs}};
  if (scene.geo) out["geo"] = {{"lat", scene.geo->lat}, {"lon", scene.geo->lon}};
  return out;
}

SceneManifest SceneFromJson(const json& j) {
  SceneManifest scene;
  scene.scene_id = Require<std::string>(j, "scene_id");
  scene.name = j.value("name", "");
  scene.external_link = j.value("external_link", "");
  scene.split = ParseSplit(j.value("split", "none"));
  if (j.contains("geo") && !j["geo"].is_null()) {
    scene.geo = GeoPoint::Make(Require<double>(j["geo"], "lat"),
                               Require<double>(j["geo"], "lon"));
  }
  for (const json& p : j.value("floor_plans", json::array())) {
    scene.floor_plans.push_back({Require<std::string>(p, "plan_id"),
                                 p.value("path", ""),
                                 Require<uint32_t>(p, "width"),
                                 Require<uint32_t>(p, "height"),
                                 p.value("accepted", true)});
  }
  for (const json& c : j.value("components", json::array())) {
    scene.components.push_back({Require<std::string>(c, "component_id"),
                                c.value("model_path", "")});
  }
  for (const json& a : j.value("alignments", json::array())) {
    scene.alignments.push_back(AlignmentFromJson(a));
  }
  for (const json& p : j.value("pairs", json::array())) {
    scene.pairs.push_back(
        {Require<std::string>(p, "plan_id"), Require<uint32_t>(p, "image_id")});
  }
  return scene;
}

json ReadJsonFile(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    Fail(ErrorCode::kMissingFile, path.string() + " not found", {path.string()});
  }
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  json doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded()) {
    Fail(ErrorCode::kMalformedText, path.string() + " is not valid JSON");
  }
  return doc;
}

void CheckVersion(const json& doc, const std::filesystem::path& path) {
  const uint32_t version = doc.value("format_version", 0u);
  if (version != kDatasetFormatVersion) {
    Fail(ErrorCode::kVersionMismatch,
         path.string() + " has format version " + std::to_string(version) +
             ", expected " + std::to_string(kDatasetFormatVersion));
  }
}

}  // namespace

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kNone: return "none";
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
  }
  return "none";
}

Split ParseSplit(std::string_view name) {
  if (name == "none") return Split::kNone;
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  Fail(ErrorCode::kInvalidArgument, "unknown split '" + std::string(name) + "'");
}

const FloorPlan* SceneManifest::FindPlan(const std::string& plan_id) const {
  for (const FloorPlan& plan : floor_plans) {
    if (plan.plan_id == plan_id) return &plan;
  }
  return nullptr;
}

const ReconstructionComponent* SceneManifest::FindComponent(
    const std::string& id) const {
  for (const ReconstructionComponent& c : components) {
    if (c.component_id == id) return &c;
  }
  return nullptr;
}

void ValidateManifest(const SceneManifest& scene) {
  const std::string where = "scene '" + scene.scene_id + "'";
  if (!IsSafeId(scene.scene_id)) {
    Fail(ErrorCode::kValidationError, where + ": id must be a non-empty path-safe token");
  }
  std::set<std::string> plan_ids;
  for (const FloorPlan& plan : scene.floor_plans) {
    if (!IsSafeId(plan.plan_id) || !plan_ids.insert(plan.plan_id).second) {
      Fail(ErrorCode::kValidationError,
           where + ": bad or duplicate plan id '" + plan.plan_id + "'");
    }
    if (plan.width == 0 || plan.height == 0) {
      Fail(ErrorCode::kValidationError,
           where + ": plan '" + plan.plan_id + "' has zero dimension");
    }
  }
  std::set<std::string> component_ids;
  for (const ReconstructionComponent& c : scene.components) {
    if (!IsSafeId(c.component_id) || !component_ids.insert(c.component_id).second) {
      Fail(ErrorCode::kValidationError,
           where + ": bad or duplicate component id '" + c.component_id + "'");
    }
  }
  for (const PlanAlignment& a : scene.alignments) {
    if (!plan_ids.contains(a.plan_id) || !component_ids.contains(a.component_id)) {
      Fail(ErrorCode::kValidationError,
           where + ": alignment (" + a.component_id + ", " + a.plan_id +
               ") references an unknown plan or component");
    }
    ValidateAlignment(a);
  }
  for (const PairRef& ref : scene.pairs) {
    if (!plan_ids.contains(ref.plan_id)) {
      Fail(ErrorCode::kValidationError,
           where + ": pair references unknown plan '" + ref.plan_id + "'");
    }
  }
}

const SceneManifest* Dataset::FindScene(const std::string& scene_id) const {
  for (const SceneManifest& scene : scenes) {
    if (scene.scene_id == scene_id) return &scene;
  }
  return nullptr;
}

void Dataset::Canonicalize() {
  std::sort(pairs.begin(), pairs.end(),
            [](const CorrespondenceSet& a, const CorrespondenceSet& b) {
              return std::tie(a.scene_id, a.plan_id, a.image_id) <
                     std::tie(b.scene_id, b.plan_id, b.image_id);
            });
  for (SceneManifest& scene : scenes) {
    scene.pairs.clear();
    for (const CorrespondenceSet& set : pairs) {
      if (set.scene_id == scene.scene_id) {
        scene.pairs.push_back({set.plan_id, set.image_id});
      }
    }
  }
}

// --- Splits ------------------------------------------------------------------

std::map<std::string, Split> SplitScenes(std::span<const SceneManifest> scenes,
                                         const SplitOptions& options) {
  if (scenes.empty()) Fail(ErrorCode::kEmptyInput, "no scenes to split");
  if (!(options.test_fraction > 0 && options.test_fraction < 1)) {
    Fail(ErrorCode::kInvalidArgument, "test_fraction must be in (0, 1)");
  }
  const uint64_t seed_mix = Mix64(options.seed);
  std::map<std::string, Split> assignment;
  for (const SceneManifest& scene : scenes) {
    if (const auto it = options.overrides.find(scene.scene_id);
        it != options.overrides.end()) {
      assignment[scene.scene_id] = it->second;
      continue;
    }
    const double u = UnitInterval(Mix64(Fnv1a64(scene.scene_id) ^ seed_mix));
    assignment[scene.scene_id] =
        u < options.test_fraction ? Split::kTest : Split::kTrain;
  }
  return assignment;
}

std::vector<PairRef> HoldoutValidationPairs(const SceneManifest& scene,
                                            uint64_t seed, double fraction) {
  if (!(fraction > 0 && fraction < 1)) {
    Fail(ErrorCode::kInvalidArgument, "holdout fraction must be in (0, 1)");
  }
  std::vector<PairRef> held;
  if (scene.split != Split::kTrain) return held;
  const uint64_t seed_mix = Mix64(seed ^ 0x76616c6964ULL);
  for (const PairRef& ref : scene.pairs) {
    const std::string key = scene.scene_id + "/" + ref.plan_id + "/" +
                            std::to_string(ref.image_id);
    if (UnitInterval(Mix64(Fnv1a64(key) ^ seed_mix)) < fraction) {
      held.push_back(ref);
    }
  }
  return held;
}

// --- Statistics ----------------------------------------------------------------

DatasetStats ComputeStats(const Dataset& dataset) {
  DatasetStats stats;
  stats.scene_count = dataset.scenes.size();
  std::set<std::pair<std::string, std::string>> plans;
  std::set<std::pair<std::string, uint32_t>> photos;
  for (const CorrespondenceSet& set : dataset.pairs) {
    plans.emplace(set.scene_id, set.plan_id);
    photos.emplace(set.scene_id, set.image_id);
    const uint64_t n = set.records.size();
    ++stats.pair_count;
    stats.total_correspondences += n;
    stats.min_per_pair = std::min(stats.min_per_pair.value_or(n), n);
    stats.max_per_pair = std::max(stats.max_per_pair.value_or(n), n);
  }
  stats.plan_count = plans.size();
  stats.photo_count = photos.size();
  // Every emitted pair carries the photo's plan pose.
  stats.pose_count = photos.size();
  if (stats.pair_count > 0) {
    stats.mean_per_pair = static_cast<double>(stats.total_correspondences) /
                          static_cast<double>(stats.pair_count);
  }
  return stats;
}

DatasetStats CombineStats(const DatasetStats& a, const DatasetStats& b) {
  DatasetStats out;
  out.scene_count = a.scene_count + b.scene_count;
  out.plan_count = a.plan_count + b.plan_count;
  out.photo_count = a.photo_count + b.photo_count;
  out.pose_count = a.pose_count + b.pose_count;
  out.pair_count = a.pair_count + b.pair_count;
  out.total_correspondences = a.total_correspondences + b.total_correspondences;
  auto merge = [](std::optional<uint64_t> x, std::optional<uint64_t> y,
                  bool take_min) -> std::optional<uint64_t> {
    if (!x) return y;
    if (!y) return x;
    return take_min ? std::min(*x, *y) : std::max(*x, *y);
  };
  out.min_per_pair = merge(a.min_per_pair, b.min_per_pair, true);
  out.max_per_pair = merge(a.max_per_pair, b.max_per_pair, false);
  if (out.pair_count > 0) {
    out.mean_per_pair = static_cast<double>(out.total_correspondences) /
                        static_cast<double>(out.pair_count);
  }
  return out;
}

// --- Pair blobs ----------------------------------------------------------------

std::vector<uint8_t> EncodePairBlob(const std::vector<Correspondence>& records) {
  std::vector<uint8_t> out;
  out.reserve(kPairBlobHeaderSize + records.size() * kPairBlobRecordSize + 4);
  out.insert(out.end(), kBlobMagic, kBlobMagic + 4);
  Append<uint32_t>(out, kPairBlobVersion);
  Append<uint64_t>(out, records.size());
  for (const Correspondence& c : records) {
    Append<uint32_t>(out, c.observation_index);
    Append<float>(out, static_cast<float>(c.photo_xy.x()));
    Append<float>(out, static_cast<float>(c.photo_xy.y()));
    Append<float>(out, static_cast<float>(c.plan_xy.x()));
    Append<float>(out, static_cast<float>(c.plan_xy.y()));
    Append<uint64_t>(out, c.point3d_id);
  }
  const uint32_t crc = Crc32(std::span<const uint8_t>(out).subspan(kPairBlobHeaderSize));
  Append<uint32_t>(out, crc);
  return out;
}

std::vector<Correspondence> DecodePairBlob(std::span<const uint8_t> bytes) {
  if (bytes.size() < kPairBlobHeaderSize + 4 ||
      std::memcmp(bytes.data(), kBlobMagic, 4) != 0) {
    Fail(ErrorCode::kChecksumFailure, "pair blob header is missing or corrupt");
  }
  const auto version = Load<uint32_t>(bytes.data() + 4);
  if (version != kPairBlobVersion) {
    Fail(ErrorCode::kVersionMismatch,
         "pair blob version " + std::to_string(version));
  }
  const auto count = Load<uint64_t>(bytes.data() + 8);
  const size_t payload = bytes.size() - kPairBlobHeaderSize - 4;
  if (count > payload / kPairBlobRecordSize ||
      payload != count * kPairBlobRecordSize) {
    Fail(ErrorCode::kChecksumFailure,
         "pair blob size does not match its record count");
  }
  const auto stored = Load<uint32_t>(bytes.data() + bytes.size() - 4);
  if (Crc32(bytes.subspan(kPairBlobHeaderSize, payload)) != stored) {
    Fail(ErrorCode::kChecksumFailure, "pair blob CRC mismatch");
  }
  std::vector<Correspondence> records(count);
  const uint8_t* p = bytes.data() + kPairBlobHeaderSize;
  for (Correspondence& c : records) {
    c.observation_index = Load<uint32_t>(p);
    c.photo_xy = {Load<float>(p + 4), Load<float>(p + 8)};
    c.plan_xy = {Load<float>(p + 12), Load<float>(p + 16)};
    c.point3d_id = Load<uint64_t>(p + 20);
    p += kPairBlobRecordSize;
  }
  return records;
}

CorrespondenceSet QuantizeForStorage(CorrespondenceSet set) {
  auto q = [](Eigen::Vector2d& v) {
    v = v.cast<float>().cast<double>();
  };
  for (Correspondence& c : set.records) {
    q(c.photo_xy);
    q(c.plan_xy);
  }
  return set;
}

// --- Export / import -------------------------------------------------------------

void WriteManifest(const std::vector<SceneManifest>& scenes,
                   const std::filesystem::path& root) {
  json doc = {{"format_version", kDatasetFormatVersion}, {"scenes", json::array()}};
  for (const SceneManifest& scene : scenes) {
    ValidateManifest(scene);
    doc["scenes"].push_back(SceneToJson(scene, {}));
  }
  WriteFileAtomic(root / "manifest.json", doc.dump(2) + "\n");
}

std::vector<SceneManifest> ImportManifest(const std::filesystem::path& root) {
  const std::filesystem::path path = root / "manifest.json";
  const json doc = ReadJsonFile(path);
  CheckVersion(doc, path);
  std::vector<SceneManifest> scenes;
  for (const json& s : doc.value("scenes", json::array())) {
    scenes.push_back(SceneFromJson(s));
    ValidateManifest(scenes.back());
  }
  return scenes;
}

void ExportDataset(const Dataset& dataset, const std::filesystem::path& out,
                   const ExportOptions& options) {
  std::map<std::string, std::vector<const CorrespondenceSet*>> by_scene;
  for (const CorrespondenceSet& set : dataset.pairs) {
    if (dataset.FindScene(set.scene_id) == nullptr) {
      Fail(ErrorCode::kValidationError,
           "pair references unknown scene '" + set.scene_id + "'");
    }
    by_scene[set.scene_id].push_back(&set);
  }
  for (auto& [scene_id, sets] : by_scene) {
    std::sort(sets.begin(), sets.end(), [](const auto* a, const auto* b) {
      return std::tie(a->plan_id, a->image_id) < std::tie(b->plan_id, b->image_id);
    });
  }

  json doc = {{"format_version", kDatasetFormatVersion}, {"scenes", json::array()}};
  for (const SceneManifest& scene : dataset.scenes) {
    ValidateManifest(scene);
    const auto& sets = by_scene[scene.scene_id];
    for (const CorrespondenceSet* set : sets) {
      if (scene.FindPlan(set->plan_id) == nullptr) {
        Fail(ErrorCode::kValidationError,
             "pair references unknown plan '" + set->plan_id + "' in scene '" +
                 scene.scene_id + "'");
      }
    }
    json entry = SceneToJson(scene, sets);
    if (sets.empty()) entry["pairs"] = json::array();
    doc["scenes"].push_back(std::move(entry));
  }

  // Per-scene shards; the manifest is renamed into place last.
  auto write_scene = [&](const SceneManifest& scene) {
    const std::filesystem::path scene_dir = out / "scenes" / scene.scene_id;
    std::filesystem::create_directories(scene_dir / "plans");
    json poses = json::array();
    for (const CorrespondenceSet* set : by_scene[scene.scene_id]) {
      WriteFileAtomic(PairPath(out, scene.scene_id, set->plan_id, set->image_id),
                      EncodePairBlob(set->records));
      json pose = ToJson(set->plan_pose);
      pose["plan_id"] = set->plan_id;
      pose["image_id"] = set->image_id;
      poses.push_back(std::move(pose));
    }
    WriteFileAtomic(scene_dir / "poses.json", poses.dump(2) + "\n");
    if (!options.source_root.empty()) {
      for (const FloorPlan& plan : scene.floor_plans) {
        if (plan.path.empty()) continue;
        const std::filesystem::path src = options.source_root / plan.path;
        const std::filesystem::path dst = out / plan.path;
        std::error_code ec;
        if (std::filesystem::exists(src) &&
            !std::filesystem::equivalent(src, dst, ec)) {
          std::filesystem::create_directories(dst.parent_path());
          std::filesystem::copy_file(
              src, dst, std::filesystem::copy_options::overwrite_existing);
        }
      }
      for (const ReconstructionComponent& c : scene.components) {
        if (c.model_path.empty()) continue;
        const std::filesystem::path src = options.source_root / c.model_path;
        const std::filesystem::path dst = out / c.model_path;
        std::error_code ec;
        if (std::filesystem::is_directory(src) &&
            !std::filesystem::equivalent(src, dst, ec)) {
          std::filesystem::create_directories(dst);
          std::filesystem::copy(src, dst,
                                std::filesystem::copy_options::recursive |
                                    std::filesystem::copy_options::overwrite_existing);
        }
      }
    }
  };

  const size_t jobs = static_cast<size_t>(std::max(options.jobs, 1));
  if (jobs == 1) {
    for (const SceneManifest& scene : dataset.scenes) write_scene(scene);
  } else {
    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    {
      std::vector<std::jthread> workers;
      for (size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
          for (size_t i = next++; i < dataset.scenes.size(); i = next++) {
            try {
              write_scene(dataset.scenes[i]);
            } catch (...) {
              std::lock_guard lock(error_mutex);
              if (!error) error = std::current_exception();
            }
          }
        });
      }
    }
    if (error) std::rethrow_exception(error);
  }
  WriteFileAtomic(out / "manifest.json", doc.dump(2) + "\n");
}

Dataset ImportDataset(const std::filesystem::path& root) {
  const std::filesystem::path manifest_path = root / "manifest.json";
  const json doc = ReadJsonFile(manifest_path);
  CheckVersion(doc, manifest_path);
  Dataset dataset;
  for (const json& s : doc.value("scenes", json::array())) {
    SceneManifest scene = SceneFromJson(s);
    ValidateManifest(scene);

    std::map<std::pair<std::string, uint32_t>, const json*> poses_by_key;
    json poses;
    if (!scene.pairs.empty()) {
      poses = ReadJsonFile(root / "scenes" / scene.scene_id / "poses.json");
      for (const json& pose : poses) {
        poses_by_key[{Require<std::string>(pose, "plan_id"),
                      Require<uint32_t>(pose, "image_id")}] = &pose;
      }
    }
    for (const json& p : s.value("pairs", json::array())) {
      CorrespondenceSet set;
      set.scene_id = scene.scene_id;
      set.plan_id = Require<std::string>(p, "plan_id");
      set.image_id = Require<uint32_t>(p, "image_id");
      set.photo_width = Require<uint32_t>(p, "photo_width");
      set.photo_height = Require<uint32_t>(p, "photo_height");
      set.plan_width = Require<double>(p, "plan_width");
      set.plan_height = Require<double>(p, "plan_height");
      const std::filesystem::path blob_path =
          PairPath(root, set.scene_id, set.plan_id, set.image_id);
      if (!std::filesystem::exists(blob_path)) {
        Fail(ErrorCode::kMissingFile, blob_path.string() + " not found",
             {blob_path.string()});
      }
      try {
        set.records = DecodePairBlob(ReadFileBytes(blob_path));
      } catch (const Error& e) {
        Fail(e.code(), blob_path.string() + ": " + e.what(), {blob_path.string()});
      }
      if (set.records.size() != Require<uint64_t>(p, "records")) {
        Fail(ErrorCode::kChecksumFailure,
             blob_path.string() + ": record count differs from manifest",
             {blob_path.string()});
      }
      const auto pose_it = poses_by_key.find({set.plan_id, set.image_id});
      if (pose_it == poses_by_key.end()) {
        Fail(ErrorCode::kIntegrityError,
             "no pose for pair " + set.plan_id + "/" + std::to_string(set.image_id));
      }
      const json& pose = *pose_it->second;
      set.plan_pose.position = {Require<double>(pose, "x"), Require<double>(pose, "y")};
      set.plan_pose.heading = Require<double>(pose, "heading");
      set.plan_pose.normalized_position = {Require<double>(pose, "x_norm"),
                                           Require<double>(pose, "y_norm")};
      dataset.pairs.push_back(std::move(set));
    }
    dataset.scenes.push_back(std::move(scene));
  }
  return dataset;
}

}  // namespace c3
