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

#include "c3/sourcing.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "c3/error.h"
#include "c3/util.h"

namespace c3 {
namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == '\v';
}

// Length of the longest rule matching `lower` at its start (prefix) or end
// (suffix), on a word boundary. 0 if none.
size_t LongestPrefix(std::string_view lower,
                     const std::vector<std::string>& prefixes) {
  size_t best = 0;
  for (const std::string& prefix : prefixes) {
    if (prefix.size() <= best || !lower.starts_with(prefix)) continue;
    if (prefix.size() < lower.size() && !IsSpace(lower[prefix.size()])) {
      continue;
    }
    best = prefix.size();
  }
  return best;
}

size_t LongestSuffix(std::string_view lower,
                     const std::vector<std::string>& suffixes) {
  size_t best = 0;
  for (const std::string& suffix : suffixes) {
    if (suffix.size() <= best || !lower.ends_with(suffix)) continue;
    const size_t start = lower.size() - suffix.size();
    if (start > 0 && !IsSpace(lower[start - 1])) continue;
    best = suffix.size();
  }
  return best;
}

std::vector<std::string> LowerAll(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const std::string& item : items) {
    std::string lower = ToLowerUtf8(TrimWhitespace(item));
    if (!lower.empty()) out.push_back(std::move(lower));
  }
  return out;
}

std::vector<std::string> ReadConfigLines(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  const std::string text(bytes.begin(), bytes.end());
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line =
        TrimWhitespace(std::string_view(text).substr(pos, end - pos));
    if (!line.empty() && line.front() != '#') lines.emplace_back(line);
    pos = end + 1;
  }
  return lines;
}

double ParseDouble(std::string_view text, const std::string& what) {
  text = TrimWhitespace(text);
  double value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    Fail(ErrorCode::kMalformedText,
         "invalid " + what + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

NameStripRules NameStripRules::Default() {
  return {{"Floor plans of the", "Floor plans of", "Floor plan of",
           "Plans of the", "Plans of", "Maps of"},
          {"in art"}};
}

NameStripRules NameStripRules::Load(const std::filesystem::path& path) {
  NameStripRules rules;
  for (const std::string& line : ReadConfigLines(path)) {
    const size_t colon = line.find(':');
    const std::string_view key =
        TrimWhitespace(std::string_view(line).substr(0, colon));
    if (colon == std::string::npos || (key != "prefix" && key != "suffix")) {
      Fail(ErrorCode::kMalformedText,
           path.string() + ": expected 'prefix: ...' or 'suffix: ...', got '" +
               line + "'");
    }
    const std::string_view value =
        TrimWhitespace(std::string_view(line).substr(colon + 1));
    if (value.empty()) continue;
    (key == "prefix" ? rules.prefixes : rules.suffixes).emplace_back(value);
  }
  return rules;
}

std::string InferSceneName(std::string_view tag, const NameStripRules& rules) {
  const std::vector<std::string> prefixes = LowerAll(rules.prefixes);
  const std::vector<std::string> suffixes = LowerAll(rules.suffixes);
  std::string_view name = TrimWhitespace(tag);
  while (true) {
    const std::string lower = ToLowerUtf8(name);
    const size_t prefix = LongestPrefix(lower, prefixes);
    const size_t suffix = LongestSuffix(lower, suffixes);
    if (prefix == 0 && suffix == 0) break;
    if (prefix + suffix > name.size()) {
      // Prefix and suffix overlap ("Maps of in art"): drop the prefix only.
      name = TrimWhitespace(name.substr(prefix));
      continue;
    }
    name = TrimWhitespace(name.substr(prefix, name.size() - prefix - suffix));
  }
  return std::string(name);
}

SceneCategories::SceneCategories(std::vector<std::string> categories)
    : categories_(LowerAll(categories)) {
  std::sort(categories_.begin(), categories_.end());
  categories_.erase(std::unique(categories_.begin(), categories_.end()),
                    categories_.end());
}

SceneCategories SceneCategories::Default() {
  return SceneCategories({
      "amphitheatre", "architectural structure", "architecture", "basilica",
      "building", "castle", "cathedral", "chapel", "château", "church",
      "destroyed building or structure", "fortification", "hospital", "house",
      "hotel", "library", "mausoleum", "mosque", "museum", "pagoda", "palace",
      "theatre", "synagogue", "temple",
  });
}

SceneCategories SceneCategories::Load(const std::filesystem::path& path) {
  return SceneCategories(ReadConfigLines(path));
}

bool SceneCategories::Contains(std::string_view scene_type) const {
  const std::string lower = ToLowerUtf8(TrimWhitespace(scene_type));
  return std::binary_search(categories_.begin(), categories_.end(), lower);
}

bool IsSceneOfInterest(std::string_view scene_type,
                       const SceneCategories& categories) {
  return categories.Contains(scene_type);
}

GeoPoint GeoPoint::Make(double lat, double lon) {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
    Fail(ErrorCode::kInvalidArgument,
         "geo point out of range: (" + FormatDouble(lat) + ", " +
             FormatDouble(lon) + ")");
  }
  return {lat, lon};
}

double HaversineMeters(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * kDeg;
  const double dlon = (b.lon - a.lon) * kDeg;
  const double s_lat = std::sin(dlat / 2);
  const double s_lon = std::sin(dlon / 2);
  const double h = s_lat * s_lat +
                   std::cos(a.lat * kDeg) * std::cos(b.lat * kDeg) * s_lon * s_lon;
  return 2.0 * kEarthMeanRadiusMeters *
         std::asin(std::min(1.0, std::sqrt(h)));
}

bool WithinRadius(const GeoPoint& center, const GeoPoint& candidate,
                  double radius_m) {
  if (!(radius_m > 0)) {
    Fail(ErrorCode::kInvalidArgument, "radius must be positive");
  }
  return HaversineMeters(center, candidate) <= radius_m;
}

std::vector<GeotaggedPhoto> ParseGeotaggedPhotos(std::string_view text) {
  std::vector<GeotaggedPhoto> photos;
  char delimiter = 0;
  size_t pos = 0;
  size_t line_number = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = TrimWhitespace(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    if (delimiter == 0) {
      delimiter = line.find('\t') != std::string_view::npos ? '\t' : ',';
      if (ToLowerUtf8(line).starts_with("photo_id")) continue;
    }
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (fields.size() < 3) {
      const size_t cut = line.find(delimiter, start);
      if (cut == std::string_view::npos) break;
      fields.push_back(line.substr(start, cut - start));
      start = cut + 1;
    }
    fields.push_back(line.substr(start));  // url may contain the delimiter
    if (fields.size() != 4) {
      Fail(ErrorCode::kMalformedText,
           "line " + std::to_string(line_number) +
               ": expected photo_id, lat, lon, url");
    }
    const std::string where = "line " + std::to_string(line_number);
    GeotaggedPhoto photo;
    photo.photo_id = std::string(TrimWhitespace(fields[0]));
    photo.location = GeoPoint::Make(ParseDouble(fields[1], where + " lat"),
                                    ParseDouble(fields[2], where + " lon"));
    photo.url = std::string(TrimWhitespace(fields[3]));
    photos.push_back(std::move(photo));
  }
  return photos;
}

std::vector<GeotaggedPhoto> LoadGeotaggedPhotos(
    const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return ParseGeotaggedPhotos(
      std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<GeotaggedPhoto> FilterByRadius(
    const std::vector<GeotaggedPhoto>& photos, const GeoPoint& center,
    double radius_m) {
  std::vector<GeotaggedPhoto> kept;
  for (const GeotaggedPhoto& photo : photos) {
    if (WithinRadius(center, photo.location, radius_m)) kept.push_back(photo);
  }
  return kept;
}

}  // namespace c3
