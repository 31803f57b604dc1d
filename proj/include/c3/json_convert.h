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

// JSON encodings shared by the manifest, the alignment journal, the HTTP
// service and the CLI.

#include "c3/dataset.h"
#include "c3/geometry.h"
#include "json.hpp"

namespace c3 {

nlohmann::json ToJson(const SimilarityTransform2D& t);
SimilarityTransform2D SimilarityFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const Eigen::Matrix3d& m);  // row-major, 9 numbers
Eigen::Matrix3d Matrix3FromJson(const nlohmann::json& j);

nlohmann::json ToJson(const PlanAlignment& a);
PlanAlignment AlignmentFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const PlanPose& p);

nlohmann::json ToJson(const DatasetStats& s);

// Reads a required member, raising kValidationError naming the key when it is
// missing or has the wrong type.
template <typename T>
T Require(const nlohmann::json& j, const char* key);

}  // namespace c3
