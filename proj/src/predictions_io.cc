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

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>

#include "c3/error.h"
#include "c3/metrics.h"
#include "c3/util.h"

namespace c3 {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary prediction files assume a little-endian host");

constexpr char kTextMagic[] = "C3P";
constexpr char kBinaryMagic[4] = {'C', '3', 'P', 'R'};
constexpr uint32_t kPredictionVersion = 1;

template <typename T>
void Put(std::vector<uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

void PutString(std::vector<uint8_t>& out, const std::string& s) {
  Put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Cursor {
 public:
  explicit Cursor(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T Get() {
    Need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string GetString() {
    const uint32_t n = Get<uint32_t>();
    Need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void Need(size_t n) const {
    if (remaining() < n) {
      Fail(ErrorCode::kChecksumFailure, "prediction file is shorter than its header");
    }
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

double ParseReal(std::string_view token, size_t line) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || end != token.data() + token.size()) {
    Fail(ErrorCode::kMalformedText, "predictions:" + std::to_string(line) +
                                        ": expected a number, got '" +
                                        std::string(token) + "'");
  }
  return value;
}

}  // namespace

std::filesystem::path PredictionPath(const std::filesystem::path& root,
                                     const PairKey& key, bool binary) {
  return root / key.scene_id / key.plan_id /
         (std::to_string(key.image_id) + (binary ? ".c3pr" : ".c3p"));
}

std::string FormatPredictionText(const PredictionSet& set) {
  std::string out = std::string(kTextMagic) + " " + std::to_string(kPredictionVersion) +
                    " " + set.scene_id + " " + set.plan_id + " " +
                    std::to_string(set.image_id) + "\n";
  for (const PredictionEntry& e : set.entries) {
    out += FormatDouble(e.query.x()) + " " + FormatDouble(e.query.y()) + " " +
           FormatDouble(e.plan_norm.x()) + " " + FormatDouble(e.plan_norm.y());
    if (e.confidence) out += " " + FormatDouble(*e.confidence);
    out += "\n";
  }
  return out;
}

PredictionSet ParsePredictionText(std::string_view text) {
  PredictionSet set;
  size_t line_no = 0;
  bool have_header = false;
  while (!text.empty()) {
    const size_t nl = text.find('\n');
    const std::string_view line =
        TrimWhitespace(text.substr(0, nl == std::string_view::npos ? text.size() : nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::vector<std::string_view> tokens = SplitWhitespace(line);
    if (!have_header) {
      if (tokens.size() != 5 || tokens[0] != kTextMagic) {
        Fail(ErrorCode::kMalformedText,
             "predictions:" + std::to_string(line_no) + ": expected 'C3P 1 scene plan image'");
      }
      if (tokens[1] != std::to_string(kPredictionVersion)) {
        Fail(ErrorCode::kVersionMismatch,
             "unsupported prediction version " + std::string(tokens[1]));
      }
      set.scene_id = std::string(tokens[2]);
      set.plan_id = std::string(tokens[3]);
      const double image = ParseReal(tokens[4], line_no);
      if (image < 0 || image > std::numeric_limits<uint32_t>::max() ||
          image != std::floor(image)) {
        Fail(ErrorCode::kMalformedText, "predictions:" + std::to_string(line_no) +
                                            ": bad image id");
      }
      set.image_id = static_cast<uint32_t>(image);
      have_header = true;
      continue;
    }
    if (tokens.size() != 4 && tokens.size() != 5) {
      Fail(ErrorCode::kMalformedText, "predictions:" + std::to_string(line_no) +
                                          ": expected 'u v x y [confidence]'");
    }
    PredictionEntry e;
    e.query = {ParseReal(tokens[0], line_no), ParseReal(tokens[1], line_no)};
    e.plan_norm = {ParseReal(tokens[2], line_no), ParseReal(tokens[3], line_no)};
    if (tokens.size() == 5) e.confidence = ParseReal(tokens[4], line_no);
    set.entries.push_back(e);
  }
  if (!have_header) Fail(ErrorCode::kMalformedText, "predictions: missing header");
  return set;
}

std::vector<uint8_t> EncodePredictionBinary(const PredictionSet& set) {
  std::vector<uint8_t> out(kBinaryMagic, kBinaryMagic + 4);
  Put<uint32_t>(out, kPredictionVersion);
  PutString(out, set.scene_id);
  PutString(out, set.plan_id);
  Put<uint32_t>(out, set.image_id);
  Put<uint64_t>(out, set.entries.size());
  for (const PredictionEntry& e : set.entries) {
    Put<double>(out, e.query.x());
    Put<double>(out, e.query.y());
    Put<double>(out, e.plan_norm.x());
    Put<double>(out, e.plan_norm.y());
    Put<double>(out, e.confidence.value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  Put<uint32_t>(out, Crc32(out));
  return out;
}

PredictionSet DecodePredictionBinary(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kBinaryMagic, 4) != 0) {
    Fail(ErrorCode::kChecksumFailure, "not a binary prediction file");
  }
  const std::span<const uint8_t> body = bytes.first(bytes.size() - 4);
  uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  Cursor in(body.subspan(4));
  const uint32_t version = in.Get<uint32_t>();
  if (version != kPredictionVersion) {
    Fail(ErrorCode::kVersionMismatch,
         "unsupported prediction version " + std::to_string(version));
  }
  if (Crc32(body) != stored) Fail(ErrorCode::kChecksumFailure, "prediction CRC mismatch");
  PredictionSet set;
  set.scene_id = in.GetString();
  set.plan_id = in.GetString();
  set.image_id = in.Get<uint32_t>();
  const uint64_t count = in.Get<uint64_t>();
  if (count > in.remaining() / 40 || in.remaining() != count * 40) {
    Fail(ErrorCode::kChecksumFailure, "prediction record count does not match size");
  }
  set.entries.resize(count);
  for (PredictionEntry& e : set.entries) {
    e.query.x() = in.Get<double>();
    e.query.y() = in.Get<double>();
    e.plan_norm.x() = in.Get<double>();
    e.plan_norm.y() = in.Get<double>();
    const double conf = in.Get<double>();
    if (!std::isnan(conf)) e.confidence = conf;
  }
  return set;
}

PredictionSet ReadPredictionFile(const std::filesystem::path& root, const PairKey& key) {
  const std::filesystem::path text = PredictionPath(root, key, false);
  if (std::filesystem::exists(text)) {
    const std::vector<uint8_t> bytes = ReadFileBytes(text);
    return ParsePredictionText(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  const std::filesystem::path binary = PredictionPath(root, key, true);
  if (std::filesystem::exists(binary)) return DecodePredictionBinary(ReadFileBytes(binary));
  Fail(ErrorCode::kMissingFile, "no predictions for " + key.ToString(),
       {key.ToString()});
}

void WritePredictionFile(const std::filesystem::path& root, const PredictionSet& set,
                         bool binary) {
  const std::filesystem::path path =
      PredictionPath(root, {set.scene_id, set.plan_id, set.image_id}, binary);
  std::filesystem::create_directories(path.parent_path());
  if (binary) {
    WriteFileAtomic(path, EncodePredictionBinary(set));
  } else {
    WriteFileAtomic(path, FormatPredictionText(set));
  }
}

}  // namespace c3
