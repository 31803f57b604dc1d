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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "c3/colmap_io.h"
#include "c3/error.h"
#include "c3/geometry.h"

namespace c3 {

// One photo pixel / plan pixel match derived from a reconstructed point.
struct Correspondence {
  Eigen::Vector2d photo_xy = Eigen::Vector2d::Zero();
  Eigen::Vector2d plan_xy = Eigen::Vector2d::Zero();
  uint64_t point3d_id = 0;
  // Index of the observation within the image.
  uint32_t observation_index = 0;

  bool operator==(const Correspondence& other) const {
    return photo_xy == other.photo_xy && plan_xy == other.plan_xy &&
           point3d_id == other.point3d_id &&
           observation_index == other.observation_index;
  }
};

// Every correspondence between one plan and one photo, plus the photo's pose
// on the plan. Normalized coordinates are derived from the stored dimensions.
struct CorrespondenceSet {
  std::string scene_id;
  std::string plan_id;
  uint32_t image_id = 0;
  uint32_t photo_width = 0;
  uint32_t photo_height = 0;
  double plan_width = 1.0;
  double plan_height = 1.0;
  std::vector<Correspondence> records;
  PlanPose plan_pose;

  Eigen::Vector2d PhotoNorm(const Correspondence& c) const {
    return c.photo_xy.cwiseQuotient(
        Eigen::Vector2d(photo_width, photo_height));
  }
  Eigen::Vector2d PlanNorm(const Correspondence& c) const {
    return c.plan_xy.cwiseQuotient(Eigen::Vector2d(plan_width, plan_height));
  }

  bool operator==(const CorrespondenceSet&) const = default;
};

enum class PhotoSource { kReproject, kObserved };

struct DeriveOptions {
  PhotoSource photo_source = PhotoSource::kReproject;
  double max_reproj_error_px = 4.0;
  bool clip_to_plan = true;
  // Worker threads for DeriveScene; output order does not depend on it.
  int jobs = 1;
};

// Correspondences for one image. Throws kUnknownImage, kNoVisiblePoints, or
// the pose error (kVerticalCamera, kUnsupportedCameraModel) when the pair
// cannot be emitted.
CorrespondenceSet DerivePair(const SparseModel& model,
                             const PlanAlignment& alignment, uint32_t image_id,
                             const DeriveOptions& options = {},
                             const std::string& scene_id = "");

struct DeriveSkip {
  uint32_t image_id = 0;
  ErrorCode code = ErrorCode::kNoVisiblePoints;
  std::string message;
};

struct SceneDerivation {
  std::vector<CorrespondenceSet> sets;  // ascending image_id
  std::vector<DeriveSkip> skipped;      // ascending image_id
};

// Runs DerivePair over every image; per-image failures become skips.
SceneDerivation DeriveScene(const SparseModel& model,
                            const PlanAlignment& alignment,
                            const DeriveOptions& options = {},
                            const std::string& scene_id = "");

}  // namespace c3
