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

#include "c3/colmap_io.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "c3/error.h"
#include "c3/util.h"

namespace c3 {

static_assert(std::endian::native == std::endian::little,
              "binary model IO assumes a little-endian host");

namespace {

struct ModelInfo {
  int id;
  std::string_view name;
  size_t arity;
};

// Supported models first; the rest are recognized so their parameters can be
// carried through, but cannot be projected.
constexpr ModelInfo kKnownModels[] = {
    {0, "SIMPLE_PINHOLE", 3},
    {1, "PINHOLE", 4},
    {2, "SIMPLE_RADIAL", 4},
    {3, "RADIAL", 5},
    {4, "OPENCV", 8},
    {5, "OPENCV_FISHEYE", 8},
    {6, "FULL_OPENCV", 12},
    {7, "FOV", 5},
    {8, "SIMPLE_RADIAL_FISHEYE", 4},
    {9, "RADIAL_FISHEYE", 5},
    {10, "THIN_PRISM_FISHEYE", 12},
    {11, "RAD_TAN_THIN_PRISM_FISHEYE", 16},
};

const ModelInfo* FindModel(int id) {
  for (const ModelInfo& info : kKnownModels) {
    if (info.id == id) return &info;
  }
  return nullptr;
}

const ModelInfo* FindModel(std::string_view name) {
  for (const ModelInfo& info : kKnownModels) {
    if (info.name == name) return &info;
  }
  return nullptr;
}

CameraModel ModelFromRawId(int id) {
  if (id >= 0 && id <= 4) return static_cast<CameraModel>(id);
  return CameraModel::kUnsupported;
}

constexpr double kQuaternionCorruption = 1e-3;
constexpr double kQuaternionTolerance = 1e-6;

// Rejects corrupt quaternions, then renormalizes. Exactly-unit inputs are left
// bit-for-bit unchanged.
void NormalizeQvec(Eigen::Vector4d& qvec, uint32_t image_id) {
  const double norm = qvec.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kQuaternionCorruption) {
    Fail(ErrorCode::kIntegrityError,
         "image " + std::to_string(image_id) + " has non-unit qvec (norm " +
             FormatDouble(norm) + ")",
         {"image:" + std::to_string(image_id)});
  }
  if (norm != 1.0) qvec /= norm;
}

// ---------------------------------------------------------------------------
// Binary

class ByteReader {
 public:
  ByteReader(std::vector<uint8_t> bytes, std::string file)
      : bytes_(std::move(bytes)), file_(std::move(file)) {}

  template <typename T>
  T Read() {
    Require(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string ReadCString() {
    const auto begin = bytes_.begin() + static_cast<std::ptrdiff_t>(pos_);
    const auto nul = std::find(begin, bytes_.end(), uint8_t{0});
    if (nul == bytes_.end()) {
      Fail(ErrorCode::kTruncatedFile,
           file_ + ": unterminated string at byte " + std::to_string(pos_));
    }
    std::string text(begin, nul);
    pos_ += text.size() + 1;
    return text;
  }

  // Guards count-driven reserves against corrupt headers.
  void RequireAtLeast(uint64_t count, size_t min_record_size) {
    if (count > (bytes_.size() - pos_) / std::max<size_t>(min_record_size, 1)) {
      Fail(ErrorCode::kTruncatedFile,
           file_ + ": count " + std::to_string(count) +
               " exceeds remaining bytes");
    }
  }

  void ExpectEnd() const {
    if (pos_ != bytes_.size()) {
      Fail(ErrorCode::kTruncatedFile,
           file_ + ": " + std::to_string(bytes_.size() - pos_) +
               " trailing bytes after last record");
    }
  }

 private:
  void Require(size_t n) const {
    if (bytes_.size() - pos_ < n) {
      Fail(ErrorCode::kTruncatedFile,
           file_ + ": unexpected end of file at byte " + std::to_string(pos_) +
               " (need " + std::to_string(n) + " more)");
    }
  }

  std::vector<uint8_t> bytes_;
  std::string file_;
  size_t pos_ = 0;
};

class ByteWriter {
 public:
  template <typename T>
  void Write(const T& value) {
    const auto* p = reinterpret_cast<const uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  void WriteCString(const std::string& text) {
    bytes_.insert(bytes_.end(), text.begin(), text.end());
    bytes_.push_back(0);
  }

  const std::vector<uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
};

std::vector<uint8_t> ReadExisting(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    Fail(ErrorCode::kMissingFile, path.string() + " not found",
         {path.string()});
  }
  return ReadFileBytes(path);
}

void ReadCamerasBinary(const std::filesystem::path& path, SparseModel& model) {
  ByteReader reader(ReadExisting(path), path.filename().string());
  const auto count = reader.Read<uint64_t>();
  reader.RequireAtLeast(count, 24);
  for (uint64_t i = 0; i < count; ++i) {
    CameraIntrinsics camera;
    camera.camera_id = reader.Read<uint32_t>();
    camera.raw_model_id = reader.Read<int32_t>();
    camera.model = ModelFromRawId(camera.raw_model_id);
    camera.width = reader.Read<uint64_t>();
    camera.height = reader.Read<uint64_t>();
    const std::optional<size_t> arity = CameraModelArity(camera.raw_model_id);
    if (!arity) {
      Fail(ErrorCode::kIntegrityError,
           "camera " + std::to_string(camera.camera_id) +
               " has unknown model id " + std::to_string(camera.raw_model_id) +
               "; parameter count cannot be determined",
           {"camera:" + std::to_string(camera.camera_id)});
    }
    camera.params.resize(*arity);
    for (double& p : camera.params) p = reader.Read<double>();
    if (!model.cameras.emplace(camera.camera_id, camera).second) {
      Fail(ErrorCode::kIntegrityError,
           "duplicate camera id " + std::to_string(camera.camera_id),
           {"camera:" + std::to_string(camera.camera_id)});
    }
  }
  reader.ExpectEnd();
}

void ReadImagesBinary(const std::filesystem::path& path, SparseModel& model) {
  ByteReader reader(ReadExisting(path), path.filename().string());
  const auto count = reader.Read<uint64_t>();
  reader.RequireAtLeast(count, 4 + 56 + 4 + 1 + 8);
  for (uint64_t i = 0; i < count; ++i) {
    ImagePose image;
    image.image_id = reader.Read<uint32_t>();
    for (int k = 0; k < 4; ++k) image.qvec[k] = reader.Read<double>();
    for (int k = 0; k < 3; ++k) image.tvec[k] = reader.Read<double>();
    image.camera_id = reader.Read<uint32_t>();
    image.name = reader.ReadCString();
    const auto num_obs = reader.Read<uint64_t>();
    reader.RequireAtLeast(num_obs, 24);
    image.observations.resize(num_obs);
    for (Observation& obs : image.observations) {
      obs.x = reader.Read<double>();
      obs.y = reader.Read<double>();
      const auto id = reader.Read<uint64_t>();
      if (id != kInvalidPoint3DId) obs.point3d_id = id;
    }
    NormalizeQvec(image.qvec, image.image_id);
    const uint32_t id = image.image_id;
    if (!model.images.emplace(id, std::move(image)).second) {
      Fail(ErrorCode::kIntegrityError,
           "duplicate image id " + std::to_string(id),
           {"image:" + std::to_string(id)});
    }
  }
  reader.ExpectEnd();
}

void ReadPointsBinary(const std::filesystem::path& path, SparseModel& model) {
  ByteReader reader(ReadExisting(path), path.filename().string());
  const auto count = reader.Read<uint64_t>();
  reader.RequireAtLeast(count, 8 + 24 + 3 + 8 + 8);
  for (uint64_t i = 0; i < count; ++i) {
    ScenePoint point;
    point.point3d_id = reader.Read<uint64_t>();
    for (int k = 0; k < 3; ++k) point.xyz[k] = reader.Read<double>();
    for (uint8_t& c : point.rgb) c = reader.Read<uint8_t>();
    point.error = reader.Read<double>();
    const auto track_length = reader.Read<uint64_t>();
    reader.RequireAtLeast(track_length, 8);
    point.track.resize(track_length);
    for (TrackElement& element : point.track) {
      element.image_id = reader.Read<uint32_t>();
      element.observation_index = reader.Read<uint32_t>();
    }
    const uint64_t id = point.point3d_id;
    if (!model.points.emplace(id, std::move(point)).second) {
      Fail(ErrorCode::kIntegrityError,
           "duplicate point id " + std::to_string(id),
           {"point:" + std::to_string(id)});
    }
  }
  reader.ExpectEnd();
}

void WriteBinary(const SparseModel& model, const std::filesystem::path& dir) {
  {
    ByteWriter w;
    w.Write<uint64_t>(model.cameras.size());
    for (const auto& [id, camera] : model.cameras) {
      if (camera.raw_model_id < 0) {
        Fail(ErrorCode::kInvalidArgument,
             "camera " + std::to_string(id) + " model '" +
                 camera.raw_model_name + "' has no binary id");
      }
      w.Write<uint32_t>(camera.camera_id);
      w.Write<int32_t>(camera.raw_model_id);
      w.Write<uint64_t>(camera.width);
      w.Write<uint64_t>(camera.height);
      for (const double p : camera.params) w.Write<double>(p);
    }
    WriteFileAtomic(dir / "cameras.bin", w.bytes());
  }
  {
    ByteWriter w;
    w.Write<uint64_t>(model.images.size());
    for (const auto& [id, image] : model.images) {
      w.Write<uint32_t>(image.image_id);
      for (int k = 0; k < 4; ++k) w.Write<double>(image.qvec[k]);
      for (int k = 0; k < 3; ++k) w.Write<double>(image.tvec[k]);
      w.Write<uint32_t>(image.camera_id);
      w.WriteCString(image.name);
      w.Write<uint64_t>(image.observations.size());
      for (const Observation& obs : image.observations) {
        w.Write<double>(obs.x);
        w.Write<double>(obs.y);
        w.Write<uint64_t>(obs.point3d_id.value_or(kInvalidPoint3DId));
      }
    }
    WriteFileAtomic(dir / "images.bin", w.bytes());
  }
  {
    ByteWriter w;
    w.Write<uint64_t>(model.points.size());
    for (const auto& [id, point] : model.points) {
      w.Write<uint64_t>(point.point3d_id);
      for (int k = 0; k < 3; ++k) w.Write<double>(point.xyz[k]);
      for (const uint8_t c : point.rgb) w.Write<uint8_t>(c);
      w.Write<double>(point.error);
      w.Write<uint64_t>(point.track.size());
      for (const TrackElement& element : point.track) {
        w.Write<uint32_t>(element.image_id);
        w.Write<uint32_t>(element.observation_index);
      }
    }
    WriteFileAtomic(dir / "points3D.bin", w.bytes());
  }
}

// ---------------------------------------------------------------------------
// Text

struct Token {
  std::string_view text;
  size_t column;  // 1-based
};

class TextCursor {
 public:
  TextCursor(std::string file, std::string_view line, size_t line_number)
      : file_(std::move(file)), line_number_(line_number) {
    for (const std::string_view token : SplitWhitespace(line)) {
      tokens_.push_back(
          {token, static_cast<size_t>(token.data() - line.data()) + 1});
    }
    end_column_ = line.size() + 1;
  }

  bool AtEnd() const { return next_ == tokens_.size(); }
  size_t Remaining() const { return tokens_.size() - next_; }

  std::string_view Next(std::string_view what) {
    if (AtEnd()) {
      Error(end_column_, "expected " + std::string(what));
    }
    return tokens_[next_++].text;
  }

  template <typename T>
  T Number(std::string_view what) {
    if (AtEnd()) {
      Error(end_column_, "expected " + std::string(what));
    }
    const Token& token = tokens_[next_];
    T value{};
    const char* begin = token.text.data();
    const char* end = begin + token.text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
      Error(token.column, "invalid " + std::string(what) + " '" +
                              std::string(token.text) + "'");
    }
    ++next_;
    return value;
  }

  void ExpectEnd() {
    if (!AtEnd()) {
      Error(tokens_[next_].column, "unexpected trailing field '" +
                                       std::string(tokens_[next_].text) + "'");
    }
  }

  [[noreturn]] void Error(size_t column, const std::string& message) const {
    Fail(ErrorCode::kMalformedText,
         file_ + ":" + std::to_string(line_number_) + ":" +
             std::to_string(column) + ": " + message,
         {file_ + ":" + std::to_string(line_number_) + ":" +
          std::to_string(column)});
  }

 private:
  std::string file_;
  size_t line_number_;
  std::vector<Token> tokens_;
  size_t next_ = 0;
  size_t end_column_ = 1;
};

class LineSource {
 public:
  explicit LineSource(const std::filesystem::path& path)
      : file_(path.filename().string()) {
    const std::vector<uint8_t> bytes = ReadExisting(path);
    text_.assign(bytes.begin(), bytes.end());
  }

  // Next non-empty, non-comment line.
  bool NextRecord(std::string_view& line) {
    while (RawLine(line)) {
      const std::string_view trimmed = TrimWhitespace(line);
      if (!trimmed.empty() && trimmed.front() != '#') return true;
    }
    return false;
  }

  // Next physical line, whatever it contains. False at end of input.
  bool RawLine(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    size_t end = text_.find('\n', pos_);
    if (end == std::string::npos) end = text_.size();
    line = std::string_view(text_).substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++line_number_;
    return true;
  }

  TextCursor Cursor(std::string_view line) const {
    return TextCursor(file_, line, line_number_);
  }

 private:
  std::string file_;
  std::string text_;
  size_t pos_ = 0;
  size_t line_number_ = 0;
};

void ReadCamerasText(const std::filesystem::path& path, SparseModel& model) {
  LineSource source(path);
  std::string_view line;
  while (source.NextRecord(line)) {
    TextCursor cursor = source.Cursor(line);
    CameraIntrinsics camera;
    camera.camera_id = cursor.Number<uint32_t>("camera id");
    const std::string_view name = cursor.Next("camera model");
    if (const ModelInfo* info = FindModel(name)) {
      camera.raw_model_id = info->id;
      camera.model = ModelFromRawId(info->id);
    } else {
      camera.raw_model_id = -1;
      camera.model = CameraModel::kUnsupported;
    }
    if (camera.model == CameraModel::kUnsupported) {
      camera.raw_model_name = std::string(name);
    }
    camera.width = cursor.Number<uint64_t>("width");
    camera.height = cursor.Number<uint64_t>("height");
    while (!cursor.AtEnd()) camera.params.push_back(cursor.Number<double>("param"));
    if (!model.cameras.emplace(camera.camera_id, camera).second) {
      Fail(ErrorCode::kIntegrityError,
           "duplicate camera id " + std::to_string(camera.camera_id),
           {"camera:" + std::to_string(camera.camera_id)});
    }
  }
}

void ReadImagesText(const std::filesystem::path& path, SparseModel& model) {
  LineSource source(path);
  std::string_view line;
  while (source.NextRecord(line)) {
    TextCursor cursor = source.Cursor(line);
    ImagePose image;
    image.image_id = cursor.Number<uint32_t>("image id");
    for (int k = 0; k < 4; ++k) image.qvec[k] = cursor.Number<double>("qvec");
    for (int k = 0; k < 3; ++k) image.tvec[k] = cursor.Number<double>("tvec");
    image.camera_id = cursor.Number<uint32_t>("camera id");
    image.name = std::string(cursor.Next("image name"));
    cursor.ExpectEnd();

    // The observation line always follows, possibly empty.
    std::string_view obs_line;
    if (!source.RawLine(obs_line)) obs_line = {};
    TextCursor obs = source.Cursor(obs_line);
    if (obs.Remaining() % 3 != 0) {
      obs.Error(1, "observation line must hold X Y POINT3D_ID triples");
    }
    while (!obs.AtEnd()) {
      Observation o;
      o.x = obs.Number<double>("observation x");
      o.y = obs.Number<double>("observation y");
      const auto id = obs.Number<int64_t>("point3d id");
      if (id >= 0) o.point3d_id = static_cast<uint64_t>(id);
      image.observations.push_back(o);
    }
    NormalizeQvec(image.qvec, image.image_id);
    const uint32_t id = image.image_id;
    if (!model.images.emplace(id, std::move(image)).second) {
      Fail(ErrorCode::kIntegrityError,
           "duplicate image id " + std::to_string(id),
           {"image:" + std::to_string(id)});
    }
  }
}

void ReadPointsText(const std::filesystem::path& path, SparseModel& model) {
  LineSource source(path);
  std::string_view line;
  while (source.NextRecord(line)) {
    TextCursor cursor = source.Cursor(line);
    ScenePoint point;
    point.point3d_id = cursor.Number<uint64_t>("point3d id");
    for (int k = 0; k < 3; ++k) point.xyz[k] = cursor.Number<double>("xyz");
    for (uint8_t& c : point.rgb) {
      const auto value = cursor.Number<unsigned>("rgb");
      if (value > 255) cursor.Error(1, "rgb component out of range");
      c = static_cast<uint8_t>(value);
    }
    point.error = cursor.Number<double>("error");
    if (cursor.Remaining() % 2 != 0) {
      cursor.Error(1, "track must hold IMAGE_ID POINT2D_IDX pairs");
    }
    while (!cursor.AtEnd()) {
      TrackElement element;
      element.image_id = cursor.Number<uint32_t>("track image id");
      element.observation_index = cursor.Number<uint32_t>("track point2d index");
      point.track.push_back(element);
    }
    const uint64_t id = point.point3d_id;
    if (!model.points.emplace(id, std::move(point)).second) {
      Fail(ErrorCode::kIntegrityError,
           "duplicate point id " + std::to_string(id),
           {"point:" + std::to_string(id)});
    }
  }
}

void WriteText(const SparseModel& model, const std::filesystem::path& dir) {
  {
    std::ostringstream out;
    out << "# Camera list with one line of data per camera:\n"
        << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
        << "# Number of cameras: " << model.cameras.size() << "\n";
    for (const auto& [id, camera] : model.cameras) {
      if (!camera.supported()) {
        Fail(ErrorCode::kUnsupportedModelInText,
             "camera " + std::to_string(id) +
                 " uses an unsupported model and cannot be written as text",
             {"camera:" + std::to_string(id)});
      }
      out << camera.camera_id << ' ' << CameraModelName(camera.model) << ' '
          << camera.width << ' ' << camera.height;
      for (const double p : camera.params) out << ' ' << FormatDouble(p);
      out << '\n';
    }
    WriteFileAtomic(dir / "cameras.txt", out.str());
  }
  {
    std::ostringstream out;
    out << "# Image list with two lines of data per image:\n"
        << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
        << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n"
        << "# Number of images: " << model.images.size() << "\n";
    for (const auto& [id, image] : model.images) {
      if (image.name.empty() ||
          image.name.find_first_of(" \t\r\n") != std::string::npos) {
        Fail(ErrorCode::kInvalidArgument,
             "image " + std::to_string(id) +
                 " name is empty or contains whitespace");
      }
      out << image.image_id;
      for (int k = 0; k < 4; ++k) out << ' ' << FormatDouble(image.qvec[k]);
      for (int k = 0; k < 3; ++k) out << ' ' << FormatDouble(image.tvec[k]);
      out << ' ' << image.camera_id << ' ' << image.name << '\n';
      bool first = true;
      for (const Observation& obs : image.observations) {
        if (!first) out << ' ';
        first = false;
        out << FormatDouble(obs.x) << ' ' << FormatDouble(obs.y) << ' ';
        if (obs.point3d_id) {
          out << *obs.point3d_id;
        } else {
          out << -1;
        }
      }
      out << '\n';
    }
    WriteFileAtomic(dir / "images.txt", out.str());
  }
  {
    std::ostringstream out;
    out << "# 3D point list with one line of data per point:\n"
        << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as "
           "(IMAGE_ID, POINT2D_IDX)\n"
        << "# Number of points: " << model.points.size() << "\n";
    for (const auto& [id, point] : model.points) {
      out << point.point3d_id;
      for (int k = 0; k < 3; ++k) out << ' ' << FormatDouble(point.xyz[k]);
      for (const uint8_t c : point.rgb) out << ' ' << static_cast<unsigned>(c);
      out << ' ' << FormatDouble(point.error);
      for (const TrackElement& element : point.track) {
        out << ' ' << element.image_id << ' ' << element.observation_index;
      }
      out << '\n';
    }
    WriteFileAtomic(dir / "points3D.txt", out.str());
  }
}

bool HasAll(const std::filesystem::path& dir, std::string_view ext) {
  for (const char* stem : {"cameras", "images", "points3D"}) {
    if (!std::filesystem::exists(dir / (std::string(stem) + std::string(ext)))) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string_view CameraModelName(CameraModel model) {
  switch (model) {
    case CameraModel::kSimplePinhole: return "SIMPLE_PINHOLE";
    case CameraModel::kPinhole: return "PINHOLE";
    case CameraModel::kSimpleRadial: return "SIMPLE_RADIAL";
    case CameraModel::kRadial: return "RADIAL";
    case CameraModel::kOpenCV: return "OPENCV";
    case CameraModel::kUnsupported: return "UNSUPPORTED";
  }
  return "UNSUPPORTED";
}

std::optional<size_t> CameraModelArity(int raw_model_id) {
  if (const ModelInfo* info = FindModel(raw_model_id)) return info->arity;
  return std::nullopt;
}

ModelFormat DetectModelFormat(const std::filesystem::path& dir) {
  if (HasAll(dir, ".bin")) return ModelFormat::kBinary;
  if (HasAll(dir, ".txt")) return ModelFormat::kText;
  Fail(ErrorCode::kMissingFile,
       dir.string() + " holds neither a complete binary nor text model",
       {dir.string()});
}

SparseModel ReadModel(const std::filesystem::path& dir, ModelFormat format) {
  if (format == ModelFormat::kAuto) format = DetectModelFormat(dir);
  SparseModel model;
  if (format == ModelFormat::kBinary) {
    ReadCamerasBinary(dir / "cameras.bin", model);
    ReadImagesBinary(dir / "images.bin", model);
    ReadPointsBinary(dir / "points3D.bin", model);
  } else {
    ReadCamerasText(dir / "cameras.txt", model);
    ReadImagesText(dir / "images.txt", model);
    ReadPointsText(dir / "points3D.txt", model);
  }
  ValidateModel(model);
  return model;
}

void WriteModel(const SparseModel& model, const std::filesystem::path& dir,
                ModelFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    Fail(ErrorCode::kIoError, "cannot create " + dir.string() + ": " +
                                  ec.message());
  }
  if (format == ModelFormat::kText) {
    WriteText(model, dir);
  } else {
    WriteBinary(model, dir);
  }
}

void ValidateModel(const SparseModel& model) {
  std::vector<std::string> issues;
  std::vector<std::string> ids;
  auto report = [&](std::string id, std::string message) {
    ids.push_back(std::move(id));
    issues.push_back(std::move(message));
  };

  for (const auto& [id, camera] : model.cameras) {
    const std::string tag = "camera:" + std::to_string(id);
    if (camera.camera_id != id) report(tag, tag + " key/id mismatch");
    if (camera.width == 0 || camera.height == 0) {
      report(tag, tag + " has zero width or height");
    }
    const std::optional<size_t> arity = CameraModelArity(camera.raw_model_id);
    if (arity && camera.params.size() != *arity) {
      report(tag, tag + " expects " + std::to_string(*arity) +
                      " params, has " + std::to_string(camera.params.size()));
      continue;
    }
    if (camera.supported()) {
      if (camera.raw_model_id != static_cast<int>(camera.model)) {
        report(tag, tag + " model/raw id mismatch");
      }
      const bool two_focals = camera.model == CameraModel::kPinhole ||
                              camera.model == CameraModel::kOpenCV;
      const bool focal_ok =
          camera.params[0] > 0 && (!two_focals || camera.params[1] > 0);
      if (!focal_ok) report(tag, tag + " has non-positive focal length");
    }
  }

  for (const auto& [id, image] : model.images) {
    const std::string tag = "image:" + std::to_string(id);
    if (image.image_id != id) report(tag, tag + " key/id mismatch");
    if (std::abs(image.qvec.norm() - 1.0) > kQuaternionTolerance) {
      report(tag, tag + " qvec is not unit length");
    }
    if (!model.cameras.contains(image.camera_id)) {
      report(tag, tag + " references missing camera " +
                      std::to_string(image.camera_id));
    }
    for (size_t k = 0; k < image.observations.size(); ++k) {
      const std::optional<uint64_t>& pid = image.observations[k].point3d_id;
      if (!pid) continue;
      const auto it = model.points.find(*pid);
      if (it == model.points.end()) {
        report("point:" + std::to_string(*pid),
               tag + " observation " + std::to_string(k) +
                   " references missing point " + std::to_string(*pid));
        continue;
      }
      const auto& track = it->second.track;
      const TrackElement expected{id, static_cast<uint32_t>(k)};
      if (std::find(track.begin(), track.end(), expected) == track.end()) {
        report("point:" + std::to_string(*pid),
               tag + " observation " + std::to_string(k) + " claims point " +
                   std::to_string(*pid) + " whose track omits it");
      }
    }
  }

  for (const auto& [id, point] : model.points) {
    const std::string tag = "point:" + std::to_string(id);
    if (point.point3d_id != id) report(tag, tag + " key/id mismatch");
    if (!(point.error >= 0)) report(tag, tag + " has negative error");
    std::set<std::pair<uint32_t, uint32_t>> seen;
    for (const TrackElement& element : point.track) {
      const auto image_it = model.images.find(element.image_id);
      if (image_it == model.images.end()) {
        report("image:" + std::to_string(element.image_id),
               tag + " track references missing image " +
                   std::to_string(element.image_id));
        continue;
      }
      const auto& observations = image_it->second.observations;
      if (element.observation_index >= observations.size()) {
        report(tag, tag + " track references observation " +
                        std::to_string(element.observation_index) +
                        " beyond image " + std::to_string(element.image_id));
        continue;
      }
      if (observations[element.observation_index].point3d_id != id) {
        report(tag, tag + " track element (" +
                        std::to_string(element.image_id) + ", " +
                        std::to_string(element.observation_index) +
                        ") does not point back");
      }
      if (!seen.emplace(element.image_id, element.observation_index).second) {
        report(tag, tag + " track repeats an element");
      }
    }
  }

  if (!issues.empty()) {
    std::string message = std::to_string(issues.size()) + " problem(s): " +
                          issues.front();
    for (size_t i = 1; i < std::min<size_t>(issues.size(), 5); ++i) {
      message += "; " + issues[i];
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    Fail(ErrorCode::kIntegrityError, message, std::move(ids));
  }
}

}  // namespace c3
