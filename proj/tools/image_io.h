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

#include <filesystem>

#include "c3/dataset.h"

namespace c3::tools {

// Decodes any format OpenCV reads into interleaved RGB (or gray). Throws
// kIoError.
Image LoadImage(const std::filesystem::path& path);

// Encodes by extension. Throws kIoError.
void SaveImage(const std::filesystem::path& path, const Image& image);

}  // namespace c3::tools
