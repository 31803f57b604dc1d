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

#include <span>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "c3/colmap_io.h"

namespace c3 {

// Conventions shared by every module:
//  - Plan and photo pixel frames: origin top-left, x right, y down.
//  - SimilarityTransform2D::theta is counter-clockwise in that frame, i.e.
//    R(theta) = [cos -sin; sin cos] applied to (x, y).
//  - Rectified world frame: +y is up; the bird's-eye view keeps (x, z).
//  - PlanPose::heading is measured from +x toward +y.

// Wraps an angle into (-pi, pi].
double NormalizeAngle(double radians);

class SimilarityTransform2D {
 public:
  SimilarityTransform2D() = default;
  // Throws kInvalidArgument unless scale > 0 and all values finite.
  SimilarityTransform2D(double scale, double theta, double tx, double ty);

  static SimilarityTransform2D Identity() { return {}; }

  double scale() const { return scale_; }
  double theta() const { return theta_; }
  double tx() const { return tx_; }
  double ty() const { return ty_; }
  Eigen::Vector2d translation() const { return {tx_, ty_}; }

  // scale * R(theta)
  Eigen::Matrix2d LinearPart() const;

  Eigen::Vector2d Apply(const Eigen::Vector2d& p) const;

  // Only rotation; scale and translation do not affect directions.
  Eigen::Vector2d RotateDirection(const Eigen::Vector2d& d) const;

  SimilarityTransform2D Inverse() const;

  // (*this) after `inner`: Compose(b).Apply(p) == Apply(b.Apply(p)).
  SimilarityTransform2D Compose(const SimilarityTransform2D& inner) const;

  bool operator==(const SimilarityTransform2D&) const = default;

 private:
  double scale_ = 1.0;
  double theta_ = 0.0;
  double tx_ = 0.0;
  double ty_ = 0.0;
};

struct PlanAlignment {
  std::string component_id;
  std::string plan_id;
  Eigen::Matrix3d rectification = Eigen::Matrix3d::Identity();
  SimilarityTransform2D similarity;
  double plan_width = 1.0;
  double plan_height = 1.0;

  bool operator==(const PlanAlignment& other) const {
    return component_id == other.component_id && plan_id == other.plan_id &&
           rectification == other.rectification &&
           similarity == other.similarity && plan_width == other.plan_width &&
           plan_height == other.plan_height;
  }
};

// Throws kValidationError if the rectification is not a proper rotation
// (within 1e-9) or the plan dimensions are not positive.
void ValidateAlignment(const PlanAlignment& alignment);

// True when `r` is orthonormal with determinant +1 within `tol`.
bool IsRotation(const Eigen::Matrix3d& r, double tol = 1e-9);

struct PlanPose {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double heading = 0.0;
  Eigen::Vector2d normalized_position = Eigen::Vector2d::Zero();

  bool operator==(const PlanPose& other) const {
    return position == other.position && heading == other.heading &&
           normalized_position == other.normalized_position;
  }
};

// Throws kNonUnitQuaternion if | |q| - 1 | > 1e-6.
Eigen::Matrix3d QuaternionToRotationMatrix(const Eigen::Vector4d& qvec);

// Camera center in world coordinates, -R^T t.
Eigen::Vector3d ProjectionCenter(const ImagePose& pose);

// Maps a world point to pixel coordinates of the image. Throws
// kUnsupportedCameraModel or kBehindCamera (z_cam <= 1e-9).
Eigen::Vector2d ProjectPoint(const CameraIntrinsics& camera,
                             const ImagePose& pose, const Eigen::Vector3d& X);

// Applies the lens model to normalized camera coordinates and returns pixels.
Eigen::Vector2d CameraToPixel(const CameraIntrinsics& camera,
                              const Eigen::Vector2d& normalized);

// Normalized negative mean of the cameras' down direction (R_i^T (0,1,0)).
// Throws kEmptyInput for a model without images, kDegenerateUp when the mean
// is shorter than 1e-6.
Eigen::Vector3d EstimateUpAxis(const SparseModel& model);

// The minimal rotation taking `up` onto +y. For up == -y the rotation is pi
// about the x axis.
Eigen::Matrix3d RectificationFromUp(const Eigen::Vector3d& up);

// Rotation about the +y axis by `angle` radians.
Eigen::Matrix3d RotationAboutUp(double angle);

// Drop-up projection of an already rectified point: (X.x, X.z).
inline Eigen::Vector2d FlattenRectified(const Eigen::Vector3d& rectified) {
  return {rectified.x(), rectified.z()};
}

// World point -> plan pixels.
Eigen::Vector2d RectifyAndFlatten(const PlanAlignment& alignment,
                                  const Eigen::Vector3d& X);

// Closed-form least-squares similarity from (source, target) pairs. Throws
// kDegenerateConfiguration with fewer than two pairs or coincident sources.
SimilarityTransform2D EstimateSimilarity(
    std::span<const std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs);

double SimilarityResidual(
    const SimilarityTransform2D& transform,
    std::span<const std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs);

// Camera position and heading on the plan. Throws kVerticalCamera when the
// flattened forward axis vanishes.
PlanPose CameraPlanPose(const PlanAlignment& alignment, const ImagePose& pose);

}  // namespace c3
