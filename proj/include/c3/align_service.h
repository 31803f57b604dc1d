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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "c3/colmap_io.h"
#include "c3/dataset.h"
#include "c3/geometry.h"

namespace c3 {

// --- Top-down rasters -------------------------------------------------------

// Grayscale density image of a rectified, flattened point cloud. Pixel
// (col, row) covers cloud x in [min_x + col / ppu, min_x + (col + 1) / ppu)
// and cloud z likewise from min_z, so plan-pixel orientation is preserved.
struct TopDownRaster {
  Image image;  // one channel
  double min_x = 0.0;
  double min_z = 0.0;
  double max_x = 0.0;
  double max_z = 0.0;
  double pixels_per_unit = 1.0;

  // Continuous maps between flattened cloud (x, z) and raster pixels.
  Eigen::Vector2d CloudToPixel(const Eigen::Vector2d& xz) const;
  Eigen::Vector2d PixelToCloud(const Eigen::Vector2d& pixel) const;
  // Integer pixel holding `xz`, clamped to the image.
  std::pair<int, int> PixelIndex(const Eigen::Vector2d& xz) const;
  // Cloud position of a pixel center.
  Eigen::Vector2d PixelCenter(int col, int row) const;
};

inline constexpr double kRasterPadding = 0.02;

// Splats every rectified point into a raster whose long side has
// `resolution` pixels. Bounds cover the points plus 2% of the larger extent;
// a zero-width axis is widened to the larger extent (or 1). Density is
// log-scaled to 8 bits. Throws kEmptyModel or kInvalidArgument.
TopDownRaster RasterizeTopDown(const SparseModel& model,
                               const Eigen::Matrix3d& rectification, int resolution);
TopDownRaster RasterizeTopDown(const std::vector<Eigen::Vector3d>& points,
                               const Eigen::Matrix3d& rectification, int resolution);

// 8-bit PNG (1 = gray, 3 = RGB, 4 = RGBA).
std::vector<uint8_t> EncodePng(const Image& image);

// --- Alignment journal ------------------------------------------------------

struct AlignmentKey {
  std::string scene_id;
  std::string component_id;
  std::string plan_id;

  auto operator<=>(const AlignmentKey&) const = default;
  std::string ToString() const;
};

struct AlignmentRecord {
  AlignmentKey key;
  SimilarityTransform2D similarity;
  std::optional<Eigen::Matrix3d> rectification;
  std::string annotator;
  int64_t timestamp = 0;  // UTC seconds
  uint64_t version = 0;

  bool operator==(const AlignmentRecord& other) const {
    return key == other.key && similarity == other.similarity &&
           rectification.has_value() == other.rectification.has_value() &&
           (!rectification || *rectification == *other.rectification) &&
           annotator == other.annotator && timestamp == other.timestamp &&
           version == other.version;
  }
};

nlohmann::json AlignmentRecordToJson(const AlignmentRecord& record);
// Throws kValidationError.
AlignmentRecord AlignmentRecordFromJson(const nlohmann::json& j);

// Throws kValidationError.
void ValidateRecord(const AlignmentRecord& record);

// Append-only journal of framed records ("C3AJ", u32 length, JSON, u32 CRC
// of the JSON). Replay keeps the last complete record per key and truncates
// any torn tail. Reads run concurrently; writes are serialized.
class AlignmentStore {
 public:
  using Clock = std::function<int64_t()>;

  explicit AlignmentStore(std::filesystem::path journal, Clock clock = {},
                          bool sync_writes = true);
  ~AlignmentStore();
  AlignmentStore(const AlignmentStore&) = delete;
  AlignmentStore& operator=(const AlignmentStore&) = delete;

  // Assigns version = latest + 1 and a timestamp, appends, and returns the
  // stored record. Throws kVersionConflict when expected_version is stale,
  // kValidationError, or kIoError.
  AlignmentRecord Put(AlignmentRecord record,
                      std::optional<uint64_t> expected_version = std::nullopt);

  std::optional<AlignmentRecord> Get(const AlignmentKey& key) const;
  std::vector<AlignmentRecord> List() const;

  // Bytes dropped from a torn tail during the last replay.
  uint64_t truncated_bytes() const { return truncated_bytes_; }
  const std::filesystem::path& path() const { return journal_; }

 private:
  void Replay();

  std::filesystem::path journal_;
  Clock clock_;
  bool sync_writes_;
  mutable std::shared_mutex mutex_;
  std::map<AlignmentKey, AlignmentRecord> latest_;
  int fd_ = -1;
  uint64_t truncated_bytes_ = 0;
};

// Frame encoding shared by the store and its tests.
std::vector<uint8_t> EncodeJournalRecord(const AlignmentRecord& record);

// --- HTTP service -----------------------------------------------------------

struct ServiceConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path journal;
  size_t page_size = 24;
  int default_raster_resolution = 512;
  int max_raster_resolution = 8192;
  AlignmentStore::Clock clock;
  bool sync_writes = true;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

class AlignService {
 public:
  // Loads the dataset manifest and replays the journal. Throws on a missing
  // or invalid manifest.
  explicit AlignService(ServiceConfig config);
  ~AlignService();

  // Transport-independent router.
  HttpResponse Handle(const HttpRequest& request);

  // Blocks serving HTTP/1.1 until Stop(). Returns false if binding fails.
  bool Serve(const std::string& host, int port);
  // Binds to an ephemeral port and returns it (0 on failure); pair with
  // ServeBound from another thread.
  int Bind(const std::string& host);
  void ServeBound();
  void Stop();

  AlignmentStore& store() { return *store_; }
  // Raster computations performed so far (cache misses).
  size_t rasterizations() const;

 private:
  struct RasterEntry {
    TopDownRaster raster;
    std::string png;
  };
  using RasterFuture = std::shared_future<std::shared_ptr<const RasterEntry>>;

  const SceneManifest* FindScene(const std::string& id) const;
  std::shared_ptr<const SparseModel> LoadComponent(const SceneManifest& scene,
                                                   const ReconstructionComponent& c);
  Eigen::Matrix3d ComponentRectification(const SceneManifest& scene,
                                         const ReconstructionComponent& c,
                                         const std::optional<std::string>& plan_id);
  std::shared_ptr<const RasterEntry> Raster(const SceneManifest& scene,
                                            const ReconstructionComponent& c,
                                            const Eigen::Matrix3d& rectification,
                                            int resolution);

  HttpResponse Route(const HttpRequest& request);

  ServiceConfig config_;
  std::vector<SceneManifest> scenes_;
  std::unique_ptr<AlignmentStore> store_;

  std::mutex model_mutex_;
  std::map<std::string, std::shared_future<std::shared_ptr<const SparseModel>>> models_;

  mutable std::mutex raster_mutex_;
  std::map<std::string, RasterFuture> rasters_;
  size_t rasterizations_ = 0;

  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace c3
