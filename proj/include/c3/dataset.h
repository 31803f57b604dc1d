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

#include "c3/correspondence.h"
#include "c3/geometry.h"
#include "c3/sourcing.h"

namespace c3 {

enum class Split { kNone, kTrain, kTest };

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);  // throws kInvalidArgument

struct FloorPlan {
  std::string plan_id;
  // Relative to the dataset root.
  std::string path;
  uint32_t width = 0;
  uint32_t height = 0;
  // Result of the manual canonicality inspection.
  bool accepted = true;

  bool operator==(const FloorPlan&) const = default;
};

struct ReconstructionComponent {
  std::string component_id;
  // Directory holding the sparse model, relative to the dataset root.
  std::string model_path;

  bool operator==(const ReconstructionComponent&) const = default;
};

struct PairRef {
  std::string plan_id;
  uint32_t image_id = 0;

  auto operator<=>(const PairRef&) const = default;
};

struct SceneManifest {
  std::string scene_id;
  std::string name;
  std::optional<GeoPoint> geo;
  std::string external_link;
  std::vector<FloorPlan> floor_plans;
  std::vector<ReconstructionComponent> components;
  std::vector<PlanAlignment> alignments;
  std::vector<PairRef> pairs;
  Split split = Split::kNone;

  const FloorPlan* FindPlan(const std::string& plan_id) const;
  const ReconstructionComponent* FindComponent(const std::string& id) const;

  bool operator==(const SceneManifest&) const = default;
};

// Throws kValidationError: ids unique, plan dimensions > 0, alignments
// reference existing plans and components, pairs reference existing plans.
void ValidateManifest(const SceneManifest& scene);

struct Dataset {
  std::vector<SceneManifest> scenes;
  // Ordered by (scene_id, plan_id, image_id).
  std::vector<CorrespondenceSet> pairs;

  const SceneManifest* FindScene(const std::string& scene_id) const;

  // Sorts pairs canonically and rebuilds each scene's pair list from them.
  void Canonicalize();

  bool operator==(const Dataset&) const = default;
};

// --- Splits ----------------------------------------------------------------

struct SplitOptions {
  uint64_t seed = 0;
  double test_fraction = 0.2;
  // Applied before hashing.
  std::map<std::string, Split> overrides;
};

// Deterministic scene-level assignment: a scene goes to test when the hash of
// (scene_id, seed) maps below test_fraction. Throws kEmptyInput or
// kInvalidArgument.
std::map<std::string, Split> SplitScenes(std::span<const SceneManifest> scenes,
                                         const SplitOptions& options);

// Pair-level holdout inside the training split, for validation only. Returns
// the held-out pairs, deterministic in seed.
std::vector<PairRef> HoldoutValidationPairs(const SceneManifest& scene,
                                            uint64_t seed, double fraction);

// --- Statistics ------------------------------------------------------------

struct DatasetStats {
  uint64_t scene_count = 0;
  uint64_t plan_count = 0;  // unique (scene, plan) with at least one pair
  uint64_t photo_count = 0;  // unique (scene, image) with at least one pair
  uint64_t pose_count = 0;   // photos carrying a plan pose
  uint64_t pair_count = 0;
  uint64_t total_correspondences = 0;
  std::optional<uint64_t> min_per_pair;
  std::optional<uint64_t> max_per_pair;
  std::optional<double> mean_per_pair;

  bool operator==(const DatasetStats&) const = default;
};

DatasetStats ComputeStats(const Dataset& dataset);

// Field-wise combination of the stats of two disjoint sets of scenes.
DatasetStats CombineStats(const DatasetStats& a, const DatasetStats& b);

// --- Augmentation ------------------------------------------------------------

// Interleaved 8-bit image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c, uint8_t fill = 0)
      : width(w), height(h), channels(c),
        pixels(static_cast<size_t>(w) * h * c, fill) {}

  uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const Image&) const = default;
};

struct JitterParams {
  // Factors are drawn uniformly from [1 - s, 1 + s]; 0 disables.
  double brightness = 0.0;
  double contrast = 0.0;
  double saturation = 0.0;
};

struct CropRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;  // exclusive
};

enum class RotationChoice {
  kNone,
  kCcw90,
  kCcw180,
  kCcw270,
  kRandomRightAngle,  // one of the four, drawn from the seed
  kArbitrary,         // uniform in [-max_rotation_deg, max_rotation_deg]
};

struct AugmentParams {
  JitterParams jitter;
  // Either an explicit rectangle or a fraction of each side with a random
  // origin. An explicit rectangle wins when both are set.
  std::optional<CropRect> crop_rect;
  std::optional<double> crop_fraction;
  RotationChoice rotation = RotationChoice::kNone;
  double max_rotation_deg = 180.0;
  uint8_t fill = 255;
};

struct AugmentResult {
  Image image;
  CorrespondenceSet records;
  // Applied to every plan coordinate (and pose) after the crop.
  double rotation_deg = 0.0;
};

// Jitter, then crop, then rotate. Records outside the crop are dropped;
// rotations map coordinates exactly (right angles) or by the continuous
// rigid transform about the canvas center (arbitrary angles). Throws
// kDimensionMismatch or kEmptyAfterCrop.
AugmentResult AugmentPlan(const Image& plan, const CorrespondenceSet& records,
                          const AugmentParams& params, uint64_t seed);

// Coordinate maps used by AugmentPlan, exposed for tests and the UI.
Eigen::Vector2d RotateCcw90(const Eigen::Vector2d& p, int width);
Eigen::Vector2d RotateCcw180(const Eigen::Vector2d& p, int width, int height);
Eigen::Vector2d RotateCcw270(const Eigen::Vector2d& p, int height);

// --- On-disk format ----------------------------------------------------------

inline constexpr uint32_t kDatasetFormatVersion = 1;
inline constexpr uint32_t kPairBlobVersion = 1;
inline constexpr size_t kPairBlobHeaderSize = 16;
inline constexpr size_t kPairBlobRecordSize = 28;

// "C3DS" blob: header, 28-byte records (u32 observation index, f32 photo x,
// y, plan x, y, u64 point3d_id), trailing CRC-32 of the records.
std::vector<uint8_t> EncodePairBlob(const std::vector<Correspondence>& records);
// Throws kVersionMismatch or kChecksumFailure (including size mismatches).
std::vector<Correspondence> DecodePairBlob(std::span<const uint8_t> bytes);

// Rounds every stored coordinate to float precision so that an in-memory
// dataset compares equal to its exported form.
CorrespondenceSet QuantizeForStorage(CorrespondenceSet set);

struct ExportOptions {
  // Plan images found at source_root/<plan.path> and model directories at
  // source_root/<model_path> are copied to the same relative paths under out.
  std::filesystem::path source_root;
  int jobs = 1;
};

void ExportDataset(const Dataset& dataset, const std::filesystem::path& out,
                   const ExportOptions& options = {});

// Reads manifest.json, every pair blob and poses. Throws kVersionMismatch,
// kChecksumFailure, kIoError, kMissingFile.
Dataset ImportDataset(const std::filesystem::path& root);

// Manifest only (no pair blobs). Pairs listed in the manifest are kept as
// references in each scene.
std::vector<SceneManifest> ImportManifest(const std::filesystem::path& root);
void WriteManifest(const std::vector<SceneManifest>& scenes,
                   const std::filesystem::path& root);

}  // namespace c3
