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

#include <zlib.h>

#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "c3/align_service.h"
#include "c3/error.h"
#include "test_util.h"

namespace c3 {
namespace {

uint32_t BigEndian32(const uint8_t* p) {
  return (uint32_t{p[0]} << 24) | (uint32_t{p[1]} << 16) | (uint32_t{p[2]} << 8) | p[3];
}

// Minimal PNG reader for 8-bit images written without filtering: checks
// every chunk CRC and inflates the image data.
Image DecodePngOracle(const std::vector<uint8_t>& png) {
  const uint8_t signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  EXPECT_EQ(std::memcmp(png.data(), signature, 8), 0);
  size_t pos = 8;
  Image out;
  std::vector<uint8_t> idat;
  bool ended = false;
  while (pos + 12 <= png.size()) {
    const uint32_t len = BigEndian32(&png[pos]);
    const std::string type(png.begin() + pos + 4, png.begin() + pos + 8);
    const uint8_t* data = &png[pos + 8];
    const uint32_t crc = static_cast<uint32_t>(crc32(0, &png[pos + 4], len + 4));
    EXPECT_EQ(crc, BigEndian32(data + len)) << type;
    if (type == "IHDR") {
      out.width = static_cast<int>(BigEndian32(data));
      out.height = static_cast<int>(BigEndian32(data + 4));
      EXPECT_EQ(data[8], 8);
      out.channels = data[9] == 0 ? 1 : data[9] == 2 ? 3 : 4;
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      ended = true;
    }
    pos += 12 + len;
  }
  EXPECT_TRUE(ended);
  EXPECT_EQ(pos, png.size());
  const size_t stride = static_cast<size_t>(out.width) * out.channels + 1;
  std::vector<uint8_t> raw(stride * out.height);
  uLongf raw_size = raw.size();
  EXPECT_EQ(uncompress(raw.data(), &raw_size, idat.data(), idat.size()), Z_OK);
  EXPECT_EQ(raw_size, raw.size());
  out.pixels.resize(static_cast<size_t>(out.width) * out.height * out.channels);
  for (int y = 0; y < out.height; ++y) {
    EXPECT_EQ(raw[y * stride], 0) << "filter byte";
    std::memcpy(&out.pixels[static_cast<size_t>(y) * (stride - 1)], &raw[y * stride + 1], stride - 1);
  }
  return out;
}

TEST(Raster, SinglePoint) {
  const TopDownRaster r = RasterizeTopDown(std::vector<Eigen::Vector3d>{{3, 7, -2}}, Eigen::Matrix3d::Identity(), 64);
  EXPECT_EQ(r.image.width, 64);
  EXPECT_EQ(r.image.height, 64);
  int lit = 0;
  for (uint8_t v : r.image.pixels) lit += v != 0;
  EXPECT_EQ(lit, 1);
  const auto [col, row] = r.PixelIndex({3, -2});
  EXPECT_EQ(r.image.at(col, row, 0), 255);
  EXPECT_LT(std::abs(col - 32), 2);
}

TEST(Raster, UnitSquareCorners) {
  const std::vector<Eigen::Vector3d> pts = {{0, 0, 0}, {1, 5, 0}, {0, -3, 1}, {1, 0, 1}};
  const TopDownRaster r = RasterizeTopDown(pts, Eigen::Matrix3d::Identity(), 100);
  EXPECT_EQ(r.image.width, 100);
  EXPECT_EQ(r.image.height, 100);
  EXPECT_NEAR(r.min_x, -0.02, 1e-15);
  EXPECT_NEAR(r.max_z, 1.02, 1e-15);
  EXPECT_EQ(r.PixelIndex({0, 0}), (std::pair<int, int>{1, 1}));
  EXPECT_EQ(r.PixelIndex({1, 1}), (std::pair<int, int>{98, 98}));
  EXPECT_EQ(r.PixelIndex({1, 0}), (std::pair<int, int>{98, 1}));
  EXPECT_EQ(r.image.at(98, 1, 0), 255);
  EXPECT_EQ(r.image.at(1, 98, 0), 255);
  EXPECT_EQ(r.image.at(50, 50, 0), 0);
}

TEST(Raster, DensityIsLogScaled) {
  std::vector<Eigen::Vector3d> pts(15, Eigen::Vector3d(0, 0, 0));
  pts.emplace_back(1, 0, 1);
  const TopDownRaster r = RasterizeTopDown(pts, Eigen::Matrix3d::Identity(), 50);
  const auto [c0, r0] = r.PixelIndex({0, 0});
  const auto [c1, r1] = r.PixelIndex({1, 1});
  EXPECT_EQ(r.image.at(c0, r0, 0), 255);
  EXPECT_EQ(r.image.at(c1, r1, 0), std::lround(255 * std::log(2.0) / std::log(16.0)));
}

TEST(Raster, PixelMapsInvertAndFollowRectification) {
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> u(-20, 20);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 500; ++i) pts.emplace_back(u(rng), u(rng), u(rng) / 2);
  const Eigen::Matrix3d rect =
      QuaternionToRotationMatrix(testing::RandomUnitQuaternion(rng));
  const TopDownRaster r = RasterizeTopDown(pts, rect, 300);
  EXPECT_EQ(std::max(r.image.width, r.image.height), 300);
  for (const Eigen::Vector3d& p : pts) {
    const Eigen::Vector2d xz = FlattenRectified(rect * p);
    EXPECT_LT((r.PixelToCloud(r.CloudToPixel(xz)) - xz).norm(), 1e-9);
    const Eigen::Vector2d px = r.CloudToPixel(xz);
    EXPECT_GT(px.minCoeff(), 0);
    EXPECT_LT(px.x(), r.image.width);
    EXPECT_LT(px.y(), r.image.height);
    const auto [col, row] = r.PixelIndex(xz);
    EXPECT_GT(r.image.at(col, row, 0), 0);
    EXPECT_LE((r.PixelCenter(col, row) - xz).cwiseAbs().maxCoeff(), 0.5 / r.pixels_per_unit + 1e-12);
  }
}

TEST(Raster, AgreesWithCameraPoseGeometry) {
  // The raster frame is the flattened cloud frame: camera plan positions
  // computed with the identity similarity land on the same pixels.
  const testing::SyntheticScene s = testing::MakeSyntheticScene(101, "s");
  const TopDownRaster r = RasterizeTopDown(s.model, s.alignment.rectification, 256);
  const SimilarityTransform2D to_pixels(r.pixels_per_unit, 0, -r.min_x * r.pixels_per_unit,
                                        -r.min_z * r.pixels_per_unit);
  for (const auto& [id, point] : s.model.points) {
    const Eigen::Vector2d a = to_pixels.Apply(FlattenRectified(s.alignment.rectification * point.xyz));
    const Eigen::Vector2d b = r.CloudToPixel(FlattenRectified(s.alignment.rectification * point.xyz));
    EXPECT_LT((a - b).norm(), 1e-9);
  }
}

TEST(Raster, Errors) {
  EXPECT_THROW(RasterizeTopDown(std::vector<Eigen::Vector3d>{}, Eigen::Matrix3d::Identity(), 10), Error);
  EXPECT_THROW(RasterizeTopDown(std::vector<Eigen::Vector3d>{{0, 0, 0}}, Eigen::Matrix3d::Identity(), 0), Error);
}

TEST(Png, DecodesToSamePixels) {
  std::mt19937_64 rng(102);
  for (int channels : {1, 3, 4}) {
    Image img(37, 11, channels);
    for (uint8_t& v : img.pixels) v = static_cast<uint8_t>(rng());
    const std::vector<uint8_t> png = EncodePng(img);
    const Image back = DecodePngOracle(png);
    EXPECT_EQ(back, img) << channels;
  }
}

}  // namespace
}  // namespace c3
