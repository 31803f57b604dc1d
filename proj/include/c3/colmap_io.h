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
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace c3 {

// Camera model ids as stored in cameras.bin. Models outside the supported set
// are kept as kUnsupported with their raw id and parameters.
enum class CameraModel : int {
  kSimplePinhole = 0,
  kPinhole = 1,
  kSimpleRadial = 2,
  kRadial = 3,
  kOpenCV = 4,
  kUnsupported = -1,
};

std::string_view CameraModelName(CameraModel model);

// Number of parameters of a supported model, or of a known unsupported model
// id (fisheye variants etc). nullopt for ids with no known arity.
std::optional<size_t> CameraModelArity(int raw_model_id);

struct CameraIntrinsics {
  uint32_t camera_id = 0;
  CameraModel model = CameraModel::kSimplePinhole;
  // Model id as found on disk; equals static_cast<int>(model) when supported.
  // -1 for unknown text model names.
  int raw_model_id = 0;
  // Model name as found in text input; only meaningful for kUnsupported.
  std::string raw_model_name;
  uint64_t width = 0;
  uint64_t height = 0;
  std::vector<double> params;

  bool supported() const { return model != CameraModel::kUnsupported; }

  bool operator==(const CameraIntrinsics&) const = default;
};

inline constexpr uint64_t kInvalidPoint3DId = 0xFFFFFFFFFFFFFFFFULL;

struct Observation {
  double x = 0.0;
  double y = 0.0;
  std::optional<uint64_t> point3d_id;

  bool operator==(const Observation&) const = default;
};

struct ImagePose {
  uint32_t image_id = 0;
  // (w, x, y, z); rotates world into camera coordinates.
  Eigen::Vector4d qvec = Eigen::Vector4d(1, 0, 0, 0);
  Eigen::Vector3d tvec = Eigen::Vector3d::Zero();
  uint32_t camera_id = 0;
  std::string name;
  std::vector<Observation> observations;

  bool operator==(const ImagePose& other) const {
    return image_id == other.image_id && qvec == other.qvec &&
           tvec == other.tvec && camera_id == other.camera_id &&
           name == other.name && observations == other.observations;
  }
};

struct TrackElement {
  uint32_t image_id = 0;
  uint32_t observation_index = 0;

  bool operator==(const TrackElement&) const = default;
};

struct ScenePoint {
  uint64_t point3d_id = 0;
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  std::array<uint8_t, 3> rgb = {0, 0, 0};
  double error = 0.0;
  std::vector<TrackElement> track;

  bool operator==(const ScenePoint& other) const {
    return point3d_id == other.point3d_id && xyz == other.xyz &&
           rgb == other.rgb && error == other.error && track == other.track;
  }
};

// A parsed sparse reconstruction. Maps are keyed by id, so writers emit
// records in ascending id order.
struct SparseModel {
  std::map<uint32_t, CameraIntrinsics> cameras;
  std::map<uint32_t, ImagePose> images;
  std::map<uint64_t, ScenePoint> points;

  bool operator==(const SparseModel&) const = default;
};

enum class ModelFormat { kBinary, kText, kAuto };

// Reads cameras, images and points3D from `dir` and validates the result.
// Throws c3::Error with kMissingFile, kTruncatedFile, kMalformedText or
// kIntegrityError.
SparseModel ReadModel(const std::filesystem::path& dir,
                      ModelFormat format = ModelFormat::kAuto);

// Throws kIoError, or kUnsupportedModelInText when a camera with an
// unsupported model is written as text. kAuto is treated as binary.
void WriteModel(const SparseModel& model, const std::filesystem::path& dir,
                ModelFormat format);

// Full invariant check: camera dimensions and arity, unit quaternions, and
// bidirectional observation/track references. Throws kIntegrityError listing
// every offending id in details().
void ValidateModel(const SparseModel& model);

// Determines which format `dir` holds. Throws kMissingFile when neither a
// complete binary nor a complete text set is present.
ModelFormat DetectModelFormat(const std::filesystem::path& dir);

}  // namespace c3
