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

#include <algorithm>
#include <cmath>

#include "c3/align_service.h"
#include "c3/error.h"

namespace c3 {

Eigen::Vector2d TopDownRaster::CloudToPixel(const Eigen::Vector2d& xz) const {
  return {(xz.x() - min_x) * pixels_per_unit, (xz.y() - min_z) * pixels_per_unit};
}

Eigen::Vector2d TopDownRaster::PixelToCloud(const Eigen::Vector2d& pixel) const {
  return {min_x + pixel.x() / pixels_per_unit, min_z + pixel.y() / pixels_per_unit};
}

std::pair<int, int> TopDownRaster::PixelIndex(const Eigen::Vector2d& xz) const {
  const Eigen::Vector2d p = CloudToPixel(xz);
  const int col = std::clamp(static_cast<int>(std::floor(p.x())), 0, image.width - 1);
  const int row = std::clamp(static_cast<int>(std::floor(p.y())), 0, image.height - 1);
  return {col, row};
}

Eigen::Vector2d TopDownRaster::PixelCenter(int col, int row) const {
  return PixelToCloud({col + 0.5, row + 0.5});
}

TopDownRaster RasterizeTopDown(const std::vector<Eigen::Vector3d>& points,
                               const Eigen::Matrix3d& rectification, int resolution) {
  if (points.empty()) Fail(ErrorCode::kEmptyModel, "no points to rasterize");
  if (resolution < 1) Fail(ErrorCode::kInvalidArgument, "resolution must be positive");

  std::vector<Eigen::Vector2d> flat;
  flat.reserve(points.size());
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  for (const Eigen::Vector3d& p : points) {
    const Eigen::Vector2d xz = FlattenRectified(rectification * p);
    if (!xz.allFinite()) Fail(ErrorCode::kInvalidArgument, "non-finite point");
    flat.push_back(xz);
    lo = lo.cwiseMin(xz);
    hi = hi.cwiseMax(xz);
  }
  double extent = (hi - lo).maxCoeff();
  if (extent <= 0) extent = 1.0;
  for (int a = 0; a < 2; ++a) {
    if (hi[a] == lo[a]) {
      lo[a] -= extent / 2;
      hi[a] += extent / 2;
    }
  }
  const double pad = kRasterPadding * extent;
  lo.array() -= pad;
  hi.array() += pad;

  TopDownRaster raster;
  raster.min_x = lo.x();
  raster.min_z = lo.y();
  raster.max_x = hi.x();
  raster.max_z = hi.y();
  const Eigen::Vector2d span = hi - lo;
  raster.pixels_per_unit = resolution / span.maxCoeff();
  const auto side = [&](double s) {
    return std::max(1, static_cast<int>(std::ceil(s * raster.pixels_per_unit - 1e-9)));
  };
  raster.image = Image(side(span.x()), side(span.y()), 1, 0);

  std::vector<uint32_t> counts(static_cast<size_t>(raster.image.width) *
                               raster.image.height, 0);
  for (const Eigen::Vector2d& xz : flat) {
    const auto [col, row] = raster.PixelIndex(xz);
    ++counts[static_cast<size_t>(row) * raster.image.width + col];
  }
  const uint32_t peak = *std::max_element(counts.begin(), counts.end());
  const double denom = std::log1p(static_cast<double>(peak));
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    const double v = 255.0 * std::log1p(static_cast<double>(counts[i])) / denom;
    raster.image.pixels[i] = static_cast<uint8_t>(std::clamp(std::lround(v), 1L, 255L));
  }
  return raster;
}

TopDownRaster RasterizeTopDown(const SparseModel& model,
                               const Eigen::Matrix3d& rectification, int resolution) {
  std::vector<Eigen::Vector3d> points;
  points.reserve(model.points.size());
  for (const auto& [id, point] : model.points) points.push_back(point.xyz);
  return RasterizeTopDown(points, rectification, resolution);
}

}  // namespace c3
