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

#include "c3/geometry.h"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "c3/error.h"
#include "c3/util.h"

namespace c3 {

double NormalizeAngle(double radians) {
  double wrapped = std::remainder(radians, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

SimilarityTransform2D::SimilarityTransform2D(double scale, double theta,
                                             double tx, double ty)
    : scale_(scale), theta_(NormalizeAngle(theta)), tx_(tx), ty_(ty) {
  if (!(scale > 0) || !std::isfinite(scale) || !std::isfinite(theta) ||
      !std::isfinite(tx) || !std::isfinite(ty)) {
    Fail(ErrorCode::kInvalidArgument,
         "similarity requires finite values and scale > 0 (scale=" +
             FormatDouble(scale) + ")");
  }
}

Eigen::Matrix2d SimilarityTransform2D::LinearPart() const {
  const double c = std::cos(theta_);
  const double s = std::sin(theta_);
  Eigen::Matrix2d m;
  m << scale_ * c, -scale_ * s, scale_ * s, scale_ * c;
  return m;
}

Eigen::Vector2d SimilarityTransform2D::Apply(const Eigen::Vector2d& p) const {
  return LinearPart() * p + translation();
}

Eigen::Vector2d SimilarityTransform2D::RotateDirection(
    const Eigen::Vector2d& d) const {
  const double c = std::cos(theta_);
  const double s = std::sin(theta_);
  return {c * d.x() - s * d.y(), s * d.x() + c * d.y()};
}

SimilarityTransform2D SimilarityTransform2D::Inverse() const {
  const SimilarityTransform2D rotation_only(1.0 / scale_, -theta_, 0, 0);
  const Eigen::Vector2d t = -rotation_only.Apply(translation());
  return {1.0 / scale_, -theta_, t.x(), t.y()};
}

SimilarityTransform2D SimilarityTransform2D::Compose(
    const SimilarityTransform2D& inner) const {
  const Eigen::Vector2d t = Apply(inner.translation());
  return {scale_ * inner.scale_, theta_ + inner.theta_, t.x(), t.y()};
}

bool IsRotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const Eigen::Matrix3d gram = r * r.transpose();
  return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

void ValidateAlignment(const PlanAlignment& alignment) {
  if (!IsRotation(alignment.rectification)) {
    Fail(ErrorCode::kValidationError,
         "rectification is not a proper rotation for component '" +
             alignment.component_id + "'");
  }
  if (!(alignment.plan_width > 0) || !(alignment.plan_height > 0) ||
      !std::isfinite(alignment.plan_width) ||
      !std::isfinite(alignment.plan_height)) {
    Fail(ErrorCode::kValidationError,
         "plan dimensions must be positive for plan '" + alignment.plan_id +
             "'");
  }
}

Eigen::Matrix3d QuaternionToRotationMatrix(const Eigen::Vector4d& qvec) {
  if (!(std::abs(qvec.norm() - 1.0) <= 1e-6)) {
    Fail(ErrorCode::kNonUnitQuaternion,
         "|q| = " + FormatDouble(qvec.norm()));
  }
  const double w = qvec[0], x = qvec[1], y = qvec[2], z = qvec[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Eigen::Vector3d ProjectionCenter(const ImagePose& pose) {
  return -QuaternionToRotationMatrix(pose.qvec).transpose() * pose.tvec;
}

Eigen::Vector2d CameraToPixel(const CameraIntrinsics& camera,
                              const Eigen::Vector2d& normalized) {
  const std::vector<double>& p = camera.params;
  const double u = normalized.x();
  const double v = normalized.y();
  const double u2 = u * u;
  const double v2 = v * v;
  const double r2 = u2 + v2;
  switch (camera.model) {
    case CameraModel::kSimplePinhole:
      return {p[0] * u + p[1], p[0] * v + p[2]};
    case CameraModel::kPinhole:
      return {p[0] * u + p[2], p[1] * v + p[3]};
    case CameraModel::kSimpleRadial: {
      const double factor = 1.0 + p[3] * r2;
      return {p[0] * u * factor + p[1], p[0] * v * factor + p[2]};
    }
    case CameraModel::kRadial: {
      const double factor = 1.0 + p[3] * r2 + p[4] * r2 * r2;
      return {p[0] * u * factor + p[1], p[0] * v * factor + p[2]};
    }
    case CameraModel::kOpenCV: {
      const double k1 = p[4], k2 = p[5], p1 = p[6], p2 = p[7];
      const double uv = u * v;
      const double radial = k1 * r2 + k2 * r2 * r2;
      const double du = u * radial + 2 * p1 * uv + p2 * (r2 + 2 * u2);
      const double dv = v * radial + 2 * p2 * uv + p1 * (r2 + 2 * v2);
      return {p[0] * (u + du) + p[2], p[1] * (v + dv) + p[3]};
    }
    case CameraModel::kUnsupported:
      break;
  }
  Fail(ErrorCode::kUnsupportedCameraModel,
       "camera " + std::to_string(camera.camera_id) + " model id " +
           std::to_string(camera.raw_model_id) + " cannot be projected");
}

Eigen::Vector2d ProjectPoint(const CameraIntrinsics& camera,
                             const ImagePose& pose, const Eigen::Vector3d& X) {
  if (!camera.supported()) {
    Fail(ErrorCode::kUnsupportedCameraModel,
         "camera " + std::to_string(camera.camera_id) + " model id " +
             std::to_string(camera.raw_model_id) + " cannot be projected");
  }
  const Eigen::Vector3d x_cam =
      QuaternionToRotationMatrix(pose.qvec) * X + pose.tvec;
  if (!(x_cam.z() > 1e-9)) {
    Fail(ErrorCode::kBehindCamera,
         "point lies behind image " + std::to_string(pose.image_id));
  }
  return CameraToPixel(camera, x_cam.hnormalized());
}

Eigen::Vector3d EstimateUpAxis(const SparseModel& model) {
  if (model.images.empty()) {
    Fail(ErrorCode::kEmptyInput, "up axis needs at least one image");
  }
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& [id, image] : model.images) {
    sum += QuaternionToRotationMatrix(image.qvec).transpose() *
           Eigen::Vector3d::UnitY();
  }
  const Eigen::Vector3d mean = sum / static_cast<double>(model.images.size());
  if (mean.norm() < 1e-6) {
    Fail(ErrorCode::kDegenerateUp, "camera down directions cancel out");
  }
  return -mean.normalized();
}

Eigen::Matrix3d RectificationFromUp(const Eigen::Vector3d& up) {
  const Eigen::Vector3d u = up.normalized();
  const Eigen::Vector3d target = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d axis = u.cross(target);
  const double sin_angle = axis.norm();
  const double cos_angle = u.dot(target);
  if (sin_angle < 1e-15) {
    if (cos_angle > 0) return Eigen::Matrix3d::Identity();
    return Eigen::Vector3d(1, -1, -1).asDiagonal();
  }
  const double angle = std::atan2(sin_angle, cos_angle);
  return Eigen::AngleAxisd(angle, axis / sin_angle).toRotationMatrix();
}

Eigen::Matrix3d RotationAboutUp(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

Eigen::Vector2d RectifyAndFlatten(const PlanAlignment& alignment,
                                  const Eigen::Vector3d& X) {
  return alignment.similarity.Apply(
      FlattenRectified(alignment.rectification * X));
}

SimilarityTransform2D EstimateSimilarity(
    std::span<const std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs) {
  if (pairs.size() < 2) {
    Fail(ErrorCode::kDegenerateConfiguration,
         "need at least two correspondences, got " +
             std::to_string(pairs.size()));
  }
  const double n = static_cast<double>(pairs.size());
  Eigen::Vector2d source_mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d target_mean = Eigen::Vector2d::Zero();
  for (const auto& [src, dst] : pairs) {
    source_mean += src;
    target_mean += dst;
  }
  source_mean /= n;
  target_mean /= n;

  // Centered sums: dot and cross terms of the 2x2 cross-covariance.
  double source_var = 0.0;
  double dot = 0.0;
  double cross = 0.0;
  for (const auto& [src, dst] : pairs) {
    const Eigen::Vector2d a = src - source_mean;
    const Eigen::Vector2d b = dst - target_mean;
    source_var += a.squaredNorm();
    dot += a.dot(b);
    cross += a.x() * b.y() - a.y() * b.x();
  }
  const double spread = 1.0 + source_mean.squaredNorm();
  if (!(source_var > 1e-24 * spread * n)) {
    Fail(ErrorCode::kDegenerateConfiguration, "source points coincide");
  }
  const double magnitude = std::hypot(dot, cross);
  if (!(magnitude > 0)) {
    Fail(ErrorCode::kDegenerateConfiguration,
         "target points coincide; scale would be zero");
  }
  const double scale = magnitude / source_var;
  const double theta = std::atan2(cross, dot);
  const SimilarityTransform2D linear(scale, theta, 0, 0);
  const Eigen::Vector2d t = target_mean - linear.Apply(source_mean);
  return {scale, theta, t.x(), t.y()};
}

double SimilarityResidual(
    const SimilarityTransform2D& transform,
    std::span<const std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs) {
  double sum = 0.0;
  for (const auto& [src, dst] : pairs) {
    sum += (transform.Apply(src) - dst).squaredNorm();
  }
  return sum;
}

PlanPose CameraPlanPose(const PlanAlignment& alignment, const ImagePose& pose) {
  const Eigen::Matrix3d rotation = QuaternionToRotationMatrix(pose.qvec);
  const Eigen::Vector3d center = -rotation.transpose() * pose.tvec;
  const Eigen::Vector3d forward =
      alignment.rectification * (rotation.transpose() * Eigen::Vector3d::UnitZ());
  const Eigen::Vector2d flat = FlattenRectified(forward);
  if (flat.norm() < 1e-9) {
    Fail(ErrorCode::kVerticalCamera,
         "image " + std::to_string(pose.image_id) +
             " looks along the up axis; heading undefined");
  }
  const Eigen::Vector2d direction = alignment.similarity.RotateDirection(flat);
  PlanPose result;
  result.position = RectifyAndFlatten(alignment, center);
  result.heading = NormalizeAngle(std::atan2(direction.y(), direction.x()));
  result.normalized_position =
      result.position.cwiseQuotient(
          Eigen::Vector2d(alignment.plan_width, alignment.plan_height));
  return result;
}

}  // namespace c3
