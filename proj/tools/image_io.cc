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

#include "image_io.h"

#include <cstring>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "c3/error.h"

namespace c3::tools {

Image LoadImage(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (mat.empty()) Fail(ErrorCode::kIoError, "cannot decode image " + path.string());
  cv::cvtColor(mat, mat, cv::COLOR_BGR2RGB);
  Image image(mat.cols, mat.rows, 3);
  for (int y = 0; y < mat.rows; ++y) {
    std::memcpy(&image.at(0, y, 0), mat.ptr<uint8_t>(y), static_cast<size_t>(mat.cols) * 3);
  }
  return image;
}

void SaveImage(const std::filesystem::path& path, const Image& image) {
  const int type = image.channels == 1 ? CV_8UC1 : CV_8UC3;
  if (image.channels != 1 && image.channels != 3) {
    Fail(ErrorCode::kInvalidArgument, "only gray or RGB images can be saved");
  }
  cv::Mat mat(image.height, image.width, type, const_cast<uint8_t*>(image.pixels.data()));
  cv::Mat out;
  if (image.channels == 3) {
    cv::cvtColor(mat, out, cv::COLOR_RGB2BGR);
  } else {
    out = mat;
  }
  if (!cv::imwrite(path.string(), out)) {
    Fail(ErrorCode::kIoError, "cannot write image " + path.string());
  }
}

}  // namespace c3::tools
