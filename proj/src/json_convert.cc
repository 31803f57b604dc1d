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

#include "c3/json_convert.h"

#include "c3/error.h"

namespace c3 {

template <typename T>
T Require(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    Fail(ErrorCode::kValidationError, std::string("missing field '") + key + "'",
         {key});
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    Fail(ErrorCode::kValidationError,
         std::string("field '") + key + "' has the wrong type", {key});
  }
}

template double Require<double>(const nlohmann::json&, const char*);
template std::string Require<std::string>(const nlohmann::json&, const char*);
template uint32_t Require<uint32_t>(const nlohmann::json&, const char*);
template uint64_t Require<uint64_t>(const nlohmann::json&, const char*);
template int64_t Require<int64_t>(const nlohmann::json&, const char*);
template bool Require<bool>(const nlohmann::json&, const char*);
template nlohmann::json Require<nlohmann::json>(const nlohmann::json&, const char*);

nlohmann::json ToJson(const SimilarityTransform2D& t) {
  return {{"scale", t.scale()}, {"theta", t.theta()}, {"tx", t.tx()},
          {"ty", t.ty()}};
}

SimilarityTransform2D SimilarityFromJson(const nlohmann::json& j) {
  try {
    return SimilarityTransform2D(Require<double>(j, "scale"),
                                 Require<double>(j, "theta"),
                                 Require<double>(j, "tx"),
                                 Require<double>(j, "ty"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) {
      Fail(ErrorCode::kValidationError, e.what(), {"scale"});
    }
    throw;
  }
}

nlohmann::json ToJson(const Eigen::Matrix3d& m) {
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::Matrix3d Matrix3FromJson(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 9) {
    Fail(ErrorCode::kValidationError, "3x3 matrix needs 9 numbers");
  }
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) {
    if (!j[i].is_number()) {
      Fail(ErrorCode::kValidationError, "matrix entries must be numbers");
    }
    m(i / 3, i % 3) = j[i].get<double>();
  }
  return m;
}

nlohmann::json ToJson(const PlanAlignment& a) {
  return {{"component_id", a.component_id},
          {"plan_id", a.plan_id},
          {"rectification", ToJson(a.rectification)},
          {"similarity", ToJson(a.similarity)},
          {"plan_width", a.plan_width},
          {"plan_height", a.plan_height}};
}

PlanAlignment AlignmentFromJson(const nlohmann::json& j) {
  PlanAlignment a;
  a.component_id = Require<std::string>(j, "component_id");
  a.plan_id = Require<std::string>(j, "plan_id");
  a.rectification = Matrix3FromJson(Require<nlohmann::json>(j, "rectification"));
  a.similarity = SimilarityFromJson(Require<nlohmann::json>(j, "similarity"));
  a.plan_width = Require<double>(j, "plan_width");
  a.plan_height = Require<double>(j, "plan_height");
  ValidateAlignment(a);
  return a;
}

nlohmann::json ToJson(const PlanPose& p) {
  return {{"x", p.position.x()},
          {"y", p.position.y()},
          {"heading", p.heading},
          {"x_norm", p.normalized_position.x()},
          {"y_norm", p.normalized_position.y()}};
}

nlohmann::json ToJson(const DatasetStats& s) {
  nlohmann::json out = {{"scenes", s.scene_count},
                        {"plans", s.plan_count},
                        {"photos", s.photo_count},
                        {"poses", s.pose_count},
                        {"pairs", s.pair_count},
                        {"correspondences", s.total_correspondences},
                        {"min_per_pair", nullptr},
                        {"max_per_pair", nullptr},
                        {"mean_per_pair", nullptr}};
  if (s.min_per_pair) out["min_per_pair"] = *s.min_per_pair;
  if (s.max_per_pair) out["max_per_pair"] = *s.max_per_pair;
  if (s.mean_per_pair) out["mean_per_pair"] = *s.mean_per_pair;
  return out;
}

}  // namespace c3
