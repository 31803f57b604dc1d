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

#include "test_util.h"

#include <atomic>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <unistd.h>

#include "c3/align_service.h"
#include "c3/util.h"

namespace c3::testing {

TempDir::TempDir() {
  static std::atomic<uint64_t> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("c3test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

namespace {

Eigen::Vector4d ExactlyUnit(Eigen::Vector4d q) {
  for (int i = 0; i < 8 && q.norm() != 1.0; ++i) q /= q.norm();
  return q;
}

}  // namespace

Eigen::Vector4d RandomUnitQuaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  while (true) {
    Eigen::Vector4d q(normal(rng), normal(rng), normal(rng), normal(rng));
    if (q.norm() < 1e-3) continue;
    q = ExactlyUnit(q);
    if (q.norm() == 1.0) return q;
  }
}

Eigen::Vector3d QuaternionSandwich(const Eigen::Vector4d& q, const Eigen::Vector3d& v) {
  // Hamilton product written out component-wise.
  auto mul = [](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    return Eigen::Vector4d(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                           a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                           a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                           a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
  };
  const Eigen::Vector4d conj(q[0], -q[1], -q[2], -q[3]);
  const Eigen::Vector4d r = mul(mul(q, Eigen::Vector4d(0, v.x(), v.y(), v.z())), conj);
  return {r[1], r[2], r[3]};
}

CameraIntrinsics RandomCamera(std::mt19937_64& rng, uint32_t id, CameraModel model) {
  std::uniform_real_distribution<double> focal(200.0, 600.0);
  std::uniform_real_distribution<double> small(-0.05, 0.05);
  CameraIntrinsics c;
  c.camera_id = id;
  c.model = model;
  c.raw_model_id = static_cast<int>(model);
  c.width = 640;
  c.height = 480;
  const double cx = 320.0 + small(rng) * 100;
  const double cy = 240.0 + small(rng) * 100;
  switch (model) {
    case CameraModel::kSimplePinhole:
      c.params = {focal(rng), cx, cy};
      break;
    case CameraModel::kPinhole:
      c.params = {focal(rng), focal(rng), cx, cy};
      break;
    case CameraModel::kSimpleRadial:
      c.params = {focal(rng), cx, cy, small(rng)};
      break;
    case CameraModel::kRadial:
      c.params = {focal(rng), cx, cy, small(rng), small(rng)};
      break;
    case CameraModel::kOpenCV:
      c.params = {focal(rng), focal(rng), cx, cy, small(rng), small(rng),
                  small(rng) * 0.1, small(rng) * 0.1};
      break;
    case CameraModel::kUnsupported:
      break;
  }
  return c;
}

SparseModel RandomModel(std::mt19937_64& rng, const RandomModelOptions& options) {
  SparseModel model;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 10.0);
  std::vector<uint32_t> camera_ids;
  for (size_t i = 0; i < options.cameras; ++i) {
    const uint32_t id = static_cast<uint32_t>(3 * i + 1);
    model.cameras[id] = RandomCamera(rng, id, static_cast<CameraModel>(i % 5));
    camera_ids.push_back(id);
  }
  if (options.unsupported_cameras) {
    for (int raw = 5; raw <= 11; ++raw) {
      const uint32_t id = static_cast<uint32_t>(1000 + raw);
      CameraIntrinsics c;
      c.camera_id = id;
      c.model = CameraModel::kUnsupported;
      c.raw_model_id = raw;
      c.width = 100 + raw;
      c.height = 50 + raw;
      for (size_t k = 0; k < *CameraModelArity(raw); ++k) c.params.push_back(unit(rng) + 0.5);
      model.cameras[id] = c;
      camera_ids.push_back(id);
    }
  }

  std::vector<uint64_t> point_ids;
  for (size_t i = 0; i < options.points; ++i) {
    // A few ids above 2^32 exercise the 64-bit fields.
    const uint64_t id = i % 97 == 5 ? (uint64_t{1} << 40) + i : 7 * i + 11;
    ScenePoint p;
    p.point3d_id = id;
    p.xyz = {normal(rng), normal(rng), normal(rng)};
    p.rgb = {static_cast<uint8_t>(rng()), static_cast<uint8_t>(rng()), static_cast<uint8_t>(rng())};
    p.error = 2.0 * unit(rng);
    model.points[id] = p;
    point_ids.push_back(id);
  }

  for (size_t i = 0; i < options.images; ++i) {
    ImagePose image;
    image.image_id = static_cast<uint32_t>(5 * i + 2);
    image.qvec = RandomUnitQuaternion(rng);
    image.tvec = {normal(rng), normal(rng), normal(rng)};
    image.camera_id = camera_ids.empty() ? 0 : camera_ids[rng() % camera_ids.size()];
    image.name = "frame_" + std::to_string(image.image_id) + ".jpg";
    const CameraIntrinsics& camera = model.cameras.at(image.camera_id);
    const size_t n = options.max_observations_per_image == 0
                         ? 0
                         : rng() % (options.max_observations_per_image + 1);
    for (size_t k = 0; k < n; ++k) {
      Observation obs;
      obs.x = unit(rng) * static_cast<double>(camera.width);
      obs.y = unit(rng) * static_cast<double>(camera.height);
      if (!point_ids.empty() && unit(rng) < 0.8) {
        const uint64_t pid = point_ids[rng() % point_ids.size()];
        obs.point3d_id = pid;
        model.points[pid].track.push_back({image.image_id, static_cast<uint32_t>(k)});
      }
      image.observations.push_back(obs);
    }
    model.images[image.image_id] = std::move(image);
  }
  return model;
}

Eigen::Vector2d OracleDistort(const CameraIntrinsics& camera, const Eigen::Vector2d& n) {
  const auto& p = camera.params;
  const double x = n.x(), y = n.y();
  const double r2 = x * x + y * y;
  switch (camera.model) {
    case CameraModel::kSimplePinhole:
      return {p[0] * x + p[1], p[0] * y + p[2]};
    case CameraModel::kPinhole:
      return {p[0] * x + p[2], p[1] * y + p[3]};
    case CameraModel::kSimpleRadial: {
      const double s = 1 + p[3] * r2;
      return {p[0] * s * x + p[1], p[0] * s * y + p[2]};
    }
    case CameraModel::kRadial: {
      const double s = 1 + p[3] * r2 + p[4] * r2 * r2;
      return {p[0] * s * x + p[1], p[0] * s * y + p[2]};
    }
    case CameraModel::kOpenCV: {
      const double k1 = p[4], k2 = p[5], p1 = p[6], p2 = p[7];
      const double s = 1 + k1 * r2 + k2 * r2 * r2;
      const double xd = x * s + 2 * p1 * x * y + p2 * (r2 + 2 * x * x);
      const double yd = y * s + p1 * (r2 + 2 * y * y) + 2 * p2 * x * y;
      return {p[0] * xd + p[2], p[1] * yd + p[3]};
    }
    case CameraModel::kUnsupported:
      break;
  }
  return {NAN, NAN};
}

Eigen::Matrix3d HorizontalLookRotation(double yaw) {
  const Eigen::Vector3d z(std::sin(yaw), 0, std::cos(yaw));
  const Eigen::Vector3d y(0, -1, 0);
  const Eigen::Vector3d x = y.cross(z);
  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return r;
}

Eigen::Vector4d RotationToQuaternion(const Eigen::Matrix3d& r) {
  Eigen::Quaterniond q(r);
  Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
  if (v[0] < 0) v = -v;
  return ExactlyUnit(v);
}

SyntheticScene MakeSyntheticScene(uint64_t seed, const std::string& scene_id,
                                  const SyntheticSceneOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  SyntheticScene scene;
  scene.scene_id = scene_id;
  SparseModel& model = scene.model;

  for (int m = 0; m < 5; ++m) {
    const uint32_t id = static_cast<uint32_t>(m + 1);
    model.cameras[id] = RandomCamera(rng, id, static_cast<CameraModel>(m));
    model.cameras[id].params[0] = 300.0;
  }
  for (int i = 0; i < options.points; ++i) {
    ScenePoint p;
    p.point3d_id = static_cast<uint64_t>(3 * i + 1);
    p.xyz = {10 * unit(rng) - 5, 4 * unit(rng) - 2, 10 * unit(rng) - 5};
    p.rgb = {static_cast<uint8_t>(rng()), static_cast<uint8_t>(rng()), static_cast<uint8_t>(rng())};
    p.error = unit(rng);
    model.points[p.point3d_id] = p;
  }
  for (int i = 0; i < options.images; ++i) {
    const double yaw = 2 * std::numbers::pi * i / options.images + 0.1 * unit(rng);
    const Eigen::Matrix3d r = HorizontalLookRotation(yaw);
    const Eigen::Vector3d center =
        -12.0 * Eigen::Vector3d(std::sin(yaw), 0, std::cos(yaw)) + Eigen::Vector3d(0, unit(rng) - 0.5, 0);
    ImagePose image;
    image.image_id = static_cast<uint32_t>(10 + i);
    image.qvec = RotationToQuaternion(r);
    const Eigen::Matrix3d rq = QuaternionToRotationMatrix(image.qvec);
    image.tvec = -rq * center;
    image.camera_id = static_cast<uint32_t>(i % 5 + 1);
    image.name = scene_id + "_" + std::to_string(image.image_id) + ".jpg";
    const CameraIntrinsics& camera = model.cameras.at(image.camera_id);
    for (auto& [pid, point] : model.points) {
      const Eigen::Vector3d xc = rq * point.xyz + image.tvec;
      if (xc.z() < 0.5) continue;
      const Eigen::Vector2d px = OracleDistort(camera, xc.hnormalized());
      if (px.x() < 0 || px.y() < 0 || px.x() > camera.width || px.y() > camera.height) continue;
      Observation obs;
      obs.x = px.x() + options.observation_noise_px * noise(rng);
      obs.y = px.y() + options.observation_noise_px * noise(rng);
      obs.point3d_id = pid;
      point.track.push_back({image.image_id, static_cast<uint32_t>(image.observations.size())});
      image.observations.push_back(obs);
      if (unit(rng) < 0.05) image.observations.push_back({unit(rng) * 640, unit(rng) * 480, {}});
    }
    model.images[image.image_id] = std::move(image);
  }

  PlanAlignment& a = scene.alignment;
  a.component_id = "c0";
  a.plan_id = "p0";
  a.similarity = SimilarityTransform2D(10.0, 0.3, 100.0, 75.0);
  a.plan_width = 200;
  a.plan_height = 150;

  SceneManifest& m = scene.manifest;
  m.scene_id = scene_id;
  m.name = "Scene " + scene_id;
  m.external_link = "https://example.org/" + scene_id;
  m.floor_plans.push_back({"p0", "scenes/" + scene_id + "/plans/p0.png", 200, 150, true});
  m.components.push_back({"c0", "models/" + scene_id + "/c0"});
  m.alignments.push_back(a);
  m.split = Split::kTest;
  return scene;
}

void WriteSourceRoot(const std::vector<SyntheticScene>& scenes, const std::filesystem::path& root) {
  std::vector<SceneManifest> manifests;
  for (const SyntheticScene& s : scenes) {
    WriteModel(s.model, root / s.manifest.components[0].model_path, ModelFormat::kBinary);
    const FloorPlan& plan = s.manifest.floor_plans[0];
    Image image(static_cast<int>(plan.width), static_cast<int>(plan.height), 3, 255);
    for (int x = 0; x < image.width; ++x) image.at(x, image.height / 2, 0) = 0;
    const std::filesystem::path plan_path = root / plan.path;
    std::filesystem::create_directories(plan_path.parent_path());
    WriteFileAtomic(plan_path, EncodePng(image));
    manifests.push_back(s.manifest);
  }
  WriteManifest(manifests, root);
}

Dataset DeriveDataset(const std::vector<SyntheticScene>& scenes, const DeriveOptions& options) {
  Dataset dataset;
  for (const SyntheticScene& s : scenes) {
    dataset.scenes.push_back(s.manifest);
    SceneDerivation d = DeriveScene(s.model, s.alignment, options, s.scene_id);
    for (CorrespondenceSet& set : d.sets) dataset.pairs.push_back(std::move(set));
  }
  dataset.Canonicalize();
  return dataset;
}

CorrespondenceSet RandomCorrespondenceSet(std::mt19937_64& rng, const std::string& scene_id,
                                          const std::string& plan_id, uint32_t image_id,
                                          size_t n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CorrespondenceSet set;
  set.scene_id = scene_id;
  set.plan_id = plan_id;
  set.image_id = image_id;
  set.photo_width = 640;
  set.photo_height = 480;
  set.plan_width = 200;
  set.plan_height = 150;
  for (size_t i = 0; i < n; ++i) {
    Correspondence c;
    c.photo_xy = {unit(rng) * 640, unit(rng) * 480};
    c.plan_xy = {unit(rng) * 200, unit(rng) * 150};
    c.point3d_id = 1000 * image_id + i;
    c.observation_index = static_cast<uint32_t>(i);
    set.records.push_back(c);
  }
  set.plan_pose.position = {unit(rng) * 200, unit(rng) * 150};
  set.plan_pose.heading = (2 * unit(rng) - 1) * std::numbers::pi;
  set.plan_pose.normalized_position = set.plan_pose.position.cwiseQuotient(Eigen::Vector2d(200, 150));
  return set;
}

}  // namespace c3::testing
