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

#include "c3/align_service.h"

#include <algorithm>
#include <charconv>
#include <random>

#include "c3/error.h"
#include "c3/json_convert.h"
#include "c3/util.h"
#include "httplib.h"

namespace c3 {
namespace {

using nlohmann::json;

constexpr size_t kDefaultPointSample = 1000;

HttpResponse JsonResponse(int status, const json& body) {
  HttpResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

HttpResponse ErrorResponse(int status, std::string_view code, const std::string& message,
                           json extra = json::object()) {
  extra["error"] = code;
  extra["message"] = message;
  return JsonResponse(status, extra);
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kMissingFile:
    case ErrorCode::kUnknownImage:
      return 404;
    case ErrorCode::kVersionConflict:
      return 409;
    case ErrorCode::kValidationError:
    case ErrorCode::kEmptyModel:
      return 422;
    case ErrorCode::kInvalidArgument:
      return 400;
    default:
      return 500;
  }
}

std::vector<std::string> SplitPath(std::string_view path) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= path.size()) {
    const size_t end = std::min(path.find('/', start), path.size());
    if (end > start) parts.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

uint64_t QueryUint(const HttpRequest& req, const std::string& key, uint64_t fallback) {
  const auto it = req.query.find(key);
  if (it == req.query.end() || it->second.empty()) return fallback;
  uint64_t value = 0;
  const std::string& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size()) {
    Fail(ErrorCode::kInvalidArgument, "query parameter '" + key + "' must be a non-negative integer");
  }
  return value;
}

json PageJson(size_t total, size_t page, size_t page_size) {
  const size_t pages = (total + page_size - 1) / page_size;
  return {{"page", page}, {"page_size", page_size}, {"total", total}, {"pages", pages}};
}

std::pair<size_t, size_t> PageRange(size_t total, size_t page, size_t page_size) {
  const size_t begin = std::min(total, (page - 1) * page_size);
  return {begin, std::min(total, begin + page_size)};
}

json SceneSummary(const SceneManifest& scene) {
  json out = {{"scene_id", scene.scene_id},
              {"name", scene.name},
              {"plans", scene.floor_plans.size()},
              {"components", scene.components.size()},
              {"split", SplitName(scene.split)}};
  return out;
}

std::string ContentTypeFor(const std::filesystem::path& path) {
  std::string ext = ToLowerUtf8(path.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

std::string RectificationDigest(const Eigen::Matrix3d& r) {
  std::string text;
  for (int i = 0; i < 9; ++i) text += FormatDouble(r(i / 3, i % 3)) + ",";
  return std::to_string(Fnv1a64(text));
}

}  // namespace

struct AlignService::Server {
  httplib::Server http;
};

AlignService::AlignService(ServiceConfig config) : config_(std::move(config)) {
  if (config_.page_size == 0) Fail(ErrorCode::kInvalidArgument, "page size must be positive");
  scenes_ = ImportManifest(config_.dataset_root);
  std::sort(scenes_.begin(), scenes_.end(),
            [](const auto& a, const auto& b) { return a.scene_id < b.scene_id; });
  const std::filesystem::path journal =
      config_.journal.empty() ? config_.dataset_root / "alignments.journal" : config_.journal;
  store_ = std::make_unique<AlignmentStore>(journal, config_.clock, config_.sync_writes);
}

AlignService::~AlignService() { Stop(); }

size_t AlignService::rasterizations() const {
  std::lock_guard lock(raster_mutex_);
  return rasterizations_;
}

const SceneManifest* AlignService::FindScene(const std::string& id) const {
  const auto it = std::lower_bound(
      scenes_.begin(), scenes_.end(), id,
      [](const SceneManifest& s, const std::string& key) { return s.scene_id < key; });
  return it != scenes_.end() && it->scene_id == id ? &*it : nullptr;
}

std::shared_ptr<const SparseModel> AlignService::LoadComponent(
    const SceneManifest& scene, const ReconstructionComponent& c) {
  const std::string key = scene.scene_id + "/" + c.component_id;
  std::promise<std::shared_ptr<const SparseModel>> promise;
  std::shared_future<std::shared_ptr<const SparseModel>> future;
  bool fill = false;
  {
    std::lock_guard lock(model_mutex_);
    const auto it = models_.find(key);
    if (it == models_.end()) {
      future = promise.get_future().share();
      models_.emplace(key, future);
      fill = true;
    } else {
      future = it->second;
    }
  }
  if (fill) {
    try {
      promise.set_value(std::make_shared<const SparseModel>(
          ReadModel(config_.dataset_root / c.model_path)));
    } catch (...) {
      promise.set_exception(std::current_exception());
      std::lock_guard lock(model_mutex_);
      models_.erase(key);
    }
  }
  return future.get();
}

Eigen::Matrix3d AlignService::ComponentRectification(
    const SceneManifest& scene, const ReconstructionComponent& c,
    const std::optional<std::string>& plan_id) {
  if (plan_id) {
    const auto record = store_->Get({scene.scene_id, c.component_id, *plan_id});
    if (record && record->rectification) return *record->rectification;
  }
  for (const PlanAlignment& a : scene.alignments) {
    if (a.component_id == c.component_id && (!plan_id || a.plan_id == *plan_id)) {
      return a.rectification;
    }
  }
  const std::shared_ptr<const SparseModel> model = LoadComponent(scene, c);
  try {
    return RectificationFromUp(EstimateUpAxis(*model));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateUp && e.code() != ErrorCode::kEmptyInput) throw;
    return Eigen::Matrix3d::Identity();
  }
}

std::shared_ptr<const AlignService::RasterEntry> AlignService::Raster(
    const SceneManifest& scene, const ReconstructionComponent& c,
    const Eigen::Matrix3d& rectification, int resolution) {
  const std::string key = scene.scene_id + "/" + c.component_id + "|" +
                          RectificationDigest(rectification) + "|" +
                          std::to_string(resolution);
  std::promise<std::shared_ptr<const RasterEntry>> promise;
  RasterFuture future;
  bool fill = false;
  {
    std::lock_guard lock(raster_mutex_);
    const auto it = rasters_.find(key);
    if (it == rasters_.end()) {
      future = promise.get_future().share();
      rasters_.emplace(key, future);
      ++rasterizations_;
      fill = true;
    } else {
      future = it->second;
    }
  }
  if (fill) {
    try {
      auto entry = std::make_shared<RasterEntry>();
      entry->raster = RasterizeTopDown(*LoadComponent(scene, c), rectification, resolution);
      const std::vector<uint8_t> png = EncodePng(entry->raster.image);
      entry->png.assign(png.begin(), png.end());
      promise.set_value(std::move(entry));
    } catch (...) {
      promise.set_exception(std::current_exception());
      std::lock_guard lock(raster_mutex_);
      rasters_.erase(key);
    }
  }
  return future.get();
}

HttpResponse AlignService::Handle(const HttpRequest& request) {
  try {
    return Route(request);
  } catch (const Error& e) {
    json extra = json::object();
    if (!e.details().empty()) extra["details"] = e.details();
    return ErrorResponse(StatusFor(e.code()), ErrorCodeName(e.code()), e.what(), extra);
  } catch (const json::exception& e) {
    return ErrorResponse(400, "BadRequest", e.what());
  } catch (const std::exception& e) {
    return ErrorResponse(500, "InternalError", e.what());
  }
}

HttpResponse AlignService::Route(const HttpRequest& req) {
  const std::vector<std::string> parts = SplitPath(req.path);
  const auto not_found = [&] {
    return ErrorResponse(404, "NotFound", "no resource at " + req.path);
  };
  const auto method_not_allowed = [&] {
    return ErrorResponse(405, "MethodNotAllowed", req.method + " " + req.path);
  };
  if (parts.empty() || parts[0] != "scenes") return not_found();
  const size_t page = std::max<uint64_t>(1, QueryUint(req, "page", 1));
  const size_t page_size =
      std::clamp<uint64_t>(QueryUint(req, "page_size", config_.page_size), 1, 1000);

  if (parts.size() == 1) {
    if (req.method != "GET") return method_not_allowed();
    json out = PageJson(scenes_.size(), page, page_size);
    out["scenes"] = json::array();
    const auto [begin, end] = PageRange(scenes_.size(), page, page_size);
    for (size_t i = begin; i < end; ++i) out["scenes"].push_back(SceneSummary(scenes_[i]));
    return JsonResponse(200, out);
  }

  const SceneManifest* scene = FindScene(parts[1]);
  if (!scene) return ErrorResponse(404, "NotFound", "unknown scene '" + parts[1] + "'");

  if (parts.size() == 2) {
    if (req.method != "GET") return method_not_allowed();
    json out = SceneSummary(*scene);
    out["geo"] = scene->geo ? json{{"lat", scene->geo->lat}, {"lon", scene->geo->lon}}
                            : json(nullptr);
    out["external_link"] = scene->external_link;
    out["floor_plans"] = json::array();
    for (const FloorPlan& p : scene->floor_plans) {
      out["floor_plans"].push_back({{"plan_id", p.plan_id},
                                    {"width", p.width},
                                    {"height", p.height},
                                    {"accepted", p.accepted}});
    }
    out["components"] = json::array();
    for (const ReconstructionComponent& c : scene->components) {
      out["components"].push_back({{"component_id", c.component_id}});
    }
    out["alignments"] = json::array();
    for (const PlanAlignment& a : scene->alignments) out["alignments"].push_back(ToJson(a));
    return JsonResponse(200, out);
  }

  const std::string& kind = parts[2];
  if (kind == "plans" && parts.size() == 5 && parts[4] == "image") {
    if (req.method != "GET") return method_not_allowed();
    const FloorPlan* plan = scene->FindPlan(parts[3]);
    if (!plan) return ErrorResponse(404, "NotFound", "unknown plan '" + parts[3] + "'");
    const std::filesystem::path file = config_.dataset_root / plan->path;
    if (!std::filesystem::exists(file)) {
      return ErrorResponse(404, "NotFound", "plan image missing for '" + parts[3] + "'");
    }
    const std::vector<uint8_t> bytes = ReadFileBytes(file);
    HttpResponse r;
    r.content_type = ContentTypeFor(file);
    r.body.assign(bytes.begin(), bytes.end());
    return r;
  }

  if (kind == "components" && parts.size() == 5) {
    if (req.method != "GET") return method_not_allowed();
    const ReconstructionComponent* c = scene->FindComponent(parts[3]);
    if (!c) return ErrorResponse(404, "NotFound", "unknown component '" + parts[3] + "'");
    if (parts[4] == "topdown") {
      const uint64_t res = QueryUint(req, "res", config_.default_raster_resolution);
      if (res < 1 || res > static_cast<uint64_t>(config_.max_raster_resolution)) {
        return ErrorResponse(422, "ValidationError",
                             "res must be in [1, " +
                                 std::to_string(config_.max_raster_resolution) + "]");
      }
      std::optional<std::string> plan_id;
      if (const auto it = req.query.find("plan"); it != req.query.end()) plan_id = it->second;
      const Eigen::Matrix3d rect = ComponentRectification(*scene, *c, plan_id);
      const auto entry = Raster(*scene, *c, rect, static_cast<int>(res));
      const TopDownRaster& r = entry->raster;
      const json meta = {{"width", r.image.width},
                         {"height", r.image.height},
                         {"bounds", {r.min_x, r.min_z, r.max_x, r.max_z}},
                         {"pixels_per_unit", r.pixels_per_unit},
                         {"rectification", ToJson(rect)}};
      const auto fmt = req.query.find("format");
      if (fmt != req.query.end() && fmt->second == "json") return JsonResponse(200, meta);
      HttpResponse out;
      out.content_type = "image/png";
      out.body = entry->png;
      out.headers["X-C3-Bounds"] = FormatDouble(r.min_x) + "," + FormatDouble(r.min_z) + "," +
                                   FormatDouble(r.max_x) + "," + FormatDouble(r.max_z);
      out.headers["X-C3-Pixels-Per-Unit"] = FormatDouble(r.pixels_per_unit);
      return out;
    }
    if (parts[4] == "points") {
      const std::shared_ptr<const SparseModel> model = LoadComponent(*scene, *c);
      const uint64_t seed = QueryUint(req, "seed", 0);
      const size_t total = model->points.size();
      const size_t k = std::min<uint64_t>(QueryUint(req, "sample", kDefaultPointSample), total);
      std::vector<const ScenePoint*> all;
      all.reserve(total);
      for (const auto& [id, p] : model->points) all.push_back(&p);
      // Partial Fisher-Yates driven only by the seed.
      std::mt19937_64 rng(seed);
      for (size_t i = 0; i < k; ++i) {
        const size_t j = i + static_cast<size_t>(UnitInterval(rng()) * (total - i));
        std::swap(all[i], all[j]);
      }
      std::sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                [](const ScenePoint* a, const ScenePoint* b) { return a->point3d_id < b->point3d_id; });
      json points = json::array();
      for (size_t i = 0; i < k; ++i) {
        const ScenePoint& p = *all[i];
        points.push_back({p.point3d_id, p.xyz.x(), p.xyz.y(), p.xyz.z(), p.rgb[0], p.rgb[1],
                          p.rgb[2]});
      }
      return JsonResponse(200, {{"total", total},
                                {"seed", seed},
                                {"fields", {"id", "x", "y", "z", "r", "g", "b"}},
                                {"points", points}});
    }
    return not_found();
  }

  if (kind == "photos" && parts.size() == 3) {
    if (req.method != "GET") return method_not_allowed();
    json items = json::array();
    for (const ReconstructionComponent& c : scene->components) {
      const std::shared_ptr<const SparseModel> model = LoadComponent(*scene, c);
      for (const auto& [id, image] : model->images) {
        items.push_back({{"component_id", c.component_id},
                         {"image_id", id},
                         {"name", image.name},
                         {"camera_id", image.camera_id}});
      }
    }
    json out = PageJson(items.size(), page, page_size);
    const auto [begin, end] = PageRange(items.size(), page, page_size);
    out["photos"] = json(std::vector<json>(items.begin() + static_cast<std::ptrdiff_t>(begin),
                                           items.begin() + static_cast<std::ptrdiff_t>(end)));
    return JsonResponse(200, out);
  }

  if (kind == "alignments" && parts.size() == 5) {
    if (!scene->FindComponent(parts[3])) {
      return ErrorResponse(404, "NotFound", "unknown component '" + parts[3] + "'");
    }
    if (!scene->FindPlan(parts[4])) {
      return ErrorResponse(404, "NotFound", "unknown plan '" + parts[4] + "'");
    }
    const AlignmentKey key{scene->scene_id, parts[3], parts[4]};
    if (req.method == "GET") {
      const auto record = store_->Get(key);
      if (!record) return ErrorResponse(404, "NotFound", "no alignment for " + key.ToString());
      return JsonResponse(200, AlignmentRecordToJson(*record));
    }
    if (req.method != "PUT") return method_not_allowed();
    const json body = json::parse(req.body);
    if (!body.is_object()) Fail(ErrorCode::kValidationError, "body must be an object");
    AlignmentRecord record;
    record.key = key;
    record.similarity =
        SimilarityFromJson(body.contains("similarity") ? body.at("similarity") : body);
    if (body.contains("rectification") && !body["rectification"].is_null()) {
      record.rectification = Matrix3FromJson(body["rectification"]);
    }
    if (body.contains("annotator")) {
      if (!body["annotator"].is_string()) {
        Fail(ErrorCode::kValidationError, "annotator must be a string", {"annotator"});
      }
      record.annotator = body["annotator"].get<std::string>();
    }
    std::optional<uint64_t> expected;
    if (body.contains("expected_version") && !body["expected_version"].is_null()) {
      if (!body["expected_version"].is_number_unsigned()) {
        Fail(ErrorCode::kValidationError, "expected_version must be a non-negative integer",
             {"expected_version"});
      }
      expected = body["expected_version"].get<uint64_t>();
    }
    try {
      return JsonResponse(200, AlignmentRecordToJson(store_->Put(record, expected)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kVersionConflict) throw;
      const auto current = store_->Get(key);
      return ErrorResponse(409, "VersionConflict", e.what(),
                           {{"current_version", current ? current->version : 0}});
    }
  }
  return not_found();
}

namespace {

void InstallRoutes(httplib::Server& http, AlignService* service) {
  auto handler = [service](const httplib::Request& in, httplib::Response& out) {
    HttpRequest req{in.method, in.path, {}, in.body};
    for (const auto& [k, v] : in.params) req.query.emplace(k, v);
    const HttpResponse res = service->Handle(req);
    out.status = res.status;
    for (const auto& [k, v] : res.headers) out.set_header(k, v);
    out.set_content(res.body, res.content_type);
  };
  http.Get(R"(/.*)", handler);
  http.Put(R"(/.*)", handler);
  // Routed so that unsupported methods get 405 from the router.
  http.Post(R"(/.*)", handler);
  http.Delete(R"(/.*)", handler);
  http.Patch(R"(/.*)", handler);
}

}  // namespace

bool AlignService::Serve(const std::string& host, int port) {
  server_ = std::make_unique<Server>();
  InstallRoutes(server_->http, this);
  return server_->http.listen(host, port);
}

int AlignService::Bind(const std::string& host) {
  server_ = std::make_unique<Server>();
  InstallRoutes(server_->http, this);
  const int port = server_->http.bind_to_any_port(host);
  return port > 0 ? port : 0;
}

void AlignService::ServeBound() {
  if (server_) server_->http.listen_after_bind();
}

void AlignService::Stop() {
  if (server_) server_->http.stop();
}

}  // namespace c3
