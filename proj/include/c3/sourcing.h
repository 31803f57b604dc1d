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
#include <string>
#include <string_view>
#include <vector>

namespace c3 {

// Prefixes and suffixes removed from media-repository category tags to
// recover a structure's name. Matching is case-insensitive, longest first,
// and only at word boundaries.
struct NameStripRules {
  std::vector<std::string> prefixes;
  std::vector<std::string> suffixes;

  static NameStripRules Default();

  // Lines "prefix: <text>" or "suffix: <text>"; '#' comments and blank lines
  // ignored. Throws kMalformedText / kIoError.
  static NameStripRules Load(const std::filesystem::path& path);
};

// Strips prefixes and suffixes until none applies, then trims. The result is
// always a contiguous substring of the input.
std::string InferSceneName(std::string_view tag,
                           const NameStripRules& rules = NameStripRules::Default());

// Lowercase scene categories (e.g. "castle", "pagoda").
class SceneCategories {
 public:
  explicit SceneCategories(std::vector<std::string> categories);

  static SceneCategories Default();

  // One category per line, '#' comments allowed.
  static SceneCategories Load(const std::filesystem::path& path);

  bool Contains(std::string_view scene_type) const;

  const std::vector<std::string>& categories() const { return categories_; }

 private:
  std::vector<std::string> categories_;  // lowercased, sorted
};

bool IsSceneOfInterest(std::string_view scene_type,
                       const SceneCategories& categories = SceneCategories::Default());

inline constexpr double kEarthMeanRadiusMeters = 6371008.8;
inline constexpr double kDefaultGeoRadiusMeters = 50.0;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  // Throws kInvalidArgument outside [-90, 90] x [-180, 180].
  static GeoPoint Make(double lat, double lon);

  bool operator==(const GeoPoint&) const = default;
};

// Great-circle distance by the haversine formula on the mean Earth sphere.
double HaversineMeters(const GeoPoint& a, const GeoPoint& b);

bool WithinRadius(const GeoPoint& center, const GeoPoint& candidate,
                  double radius_m = kDefaultGeoRadiusMeters);

struct GeotaggedPhoto {
  std::string photo_id;
  GeoPoint location;
  std::string url;

  bool operator==(const GeotaggedPhoto&) const = default;
};

// Delimited text with columns photo_id, lat, lon, url. The delimiter (tab or
// comma) is taken from the first record; a header row starting with
// "photo_id" is skipped.
std::vector<GeotaggedPhoto> ParseGeotaggedPhotos(std::string_view text);
std::vector<GeotaggedPhoto> LoadGeotaggedPhotos(const std::filesystem::path& path);

// Photos within `radius_m` of `center`, in input order.
std::vector<GeotaggedPhoto> FilterByRadius(const std::vector<GeotaggedPhoto>& photos,
                                           const GeoPoint& center,
                                           double radius_m = kDefaultGeoRadiusMeters);

}  // namespace c3
