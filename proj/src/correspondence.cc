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

#include "c3/correspondence.h"

#include <atomic>
#include <thread>
#include <unordered_set>

namespace c3 {
namespace {

bool InsideBounds(const Eigen::Vector2d& p, double width, double height) {
  return p.x() >= 0 && p.y() >= 0 && p.x() <= width && p.y() <= height;
}

}  // namespace

CorrespondenceSet DerivePair(const SparseModel& model,
                             const PlanAlignment& alignment, uint32_t image_id,
                             const DeriveOptions& options,
                             const std::string& scene_id) {
  const auto image_it = model.images.find(image_id);
  if (image_it == model.images.end()) {
    Fail(ErrorCode::kUnknownImage,
         "image " + std::to_string(image_id) + " not in model",
         {"image:" + std::to_string(image_id)});
  }
  const ImagePose& image = image_it->second;
  const CameraIntrinsics& camera = model.cameras.at(image.camera_id);
  if (options.photo_source == PhotoSource::kReproject && !camera.supported()) {
    Fail(ErrorCode::kUnsupportedCameraModel,
         "camera " + std::to_string(camera.camera_id) + " of image " +
             std::to_string(image_id) + " cannot be projected");
  }

  CorrespondenceSet set;
  set.scene_id = scene_id;
  set.plan_id = alignment.plan_id;
  set.image_id = image_id;
  set.photo_width = static_cast<uint32_t>(camera.width);
  set.photo_height = static_cast<uint32_t>(camera.height);
  set.plan_width = alignment.plan_width;
  set.plan_height = alignment.plan_height;
  set.plan_pose = CameraPlanPose(alignment, image);

  // Walk the image's observations; each point appears at most once in the
  // set (the first observation wins if a track repeats an image).
  std::unordered_set<uint64_t> used;
  for (size_t k = 0; k < image.observations.size(); ++k) {
    const Observation& obs = image.observations[k];
    if (!obs.point3d_id) continue;
    const ScenePoint& point = model.points.at(*obs.point3d_id);
    if (point.error > options.max_reproj_error_px) continue;
    if (used.contains(point.point3d_id)) continue;

    Eigen::Vector2d photo_xy;
    if (options.photo_source == PhotoSource::kReproject) {
      try {
        photo_xy = ProjectPoint(camera, image, point.xyz);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kBehindCamera) continue;
        throw;
      }
    } else {
      photo_xy = Eigen::Vector2d(obs.x, obs.y);
    }
    if (!photo_xy.allFinite() ||
        !InsideBounds(photo_xy, static_cast<double>(camera.width),
                      static_cast<double>(camera.height))) {
      continue;
    }

    const Eigen::Vector2d plan_xy = RectifyAndFlatten(alignment, point.xyz);
    if (!plan_xy.allFinite()) continue;
    if (options.clip_to_plan &&
        !InsideBounds(plan_xy, alignment.plan_width, alignment.plan_height)) {
      continue;
    }
    used.insert(point.point3d_id);
    set.records.push_back(
        {photo_xy, plan_xy, point.point3d_id, static_cast<uint32_t>(k)});
  }

  if (set.records.empty()) {
    Fail(ErrorCode::kNoVisiblePoints,
         "image " + std::to_string(image_id) + " has no surviving points",
         {"image:" + std::to_string(image_id)});
  }
  return set;
}

SceneDerivation DeriveScene(const SparseModel& model,
                            const PlanAlignment& alignment,
                            const DeriveOptions& options,
                            const std::string& scene_id) {
  ValidateAlignment(alignment);
  std::vector<uint32_t> image_ids;
  image_ids.reserve(model.images.size());
  for (const auto& [id, image] : model.images) image_ids.push_back(id);

  struct Slot {
    std::optional<CorrespondenceSet> set;
    std::optional<DeriveSkip> skip;
  };
  std::vector<Slot> slots(image_ids.size());
  auto work = [&](size_t i) {
    try {
      slots[i].set = DerivePair(model, alignment, image_ids[i], options, scene_id);
    } catch (const Error& e) {
      slots[i].skip = DeriveSkip{image_ids[i], e.code(), e.what()};
    }
  };

  const size_t jobs = static_cast<size_t>(std::max(options.jobs, 1));
  if (jobs == 1 || image_ids.size() < 2) {
    for (size_t i = 0; i < image_ids.size(); ++i) work(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::jthread> workers;
    for (size_t w = 0; w < std::min(jobs, image_ids.size()); ++w) {
      workers.emplace_back([&] {
        for (size_t i = next++; i < image_ids.size(); i = next++) work(i);
      });
    }
  }

  SceneDerivation result;
  for (Slot& slot : slots) {
    if (slot.set) result.sets.push_back(std::move(*slot.set));
    if (slot.skip) result.skipped.push_back(std::move(*slot.skip));
  }
  return result;
}

}  // namespace c3
