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

#include "c3/util.h"

#include <unistd.h>
#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "c3/error.h"

namespace c3 {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kIntegrityError: return "IntegrityError";
    case ErrorCode::kMalformedText: return "MalformedText";
    case ErrorCode::kUnsupportedModelInText: return "UnsupportedModelInText";
    case ErrorCode::kNonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kUnsupportedCameraModel: return "UnsupportedCameraModel";
    case ErrorCode::kDegenerateUp: return "DegenerateUp";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kVerticalCamera: return "VerticalCamera";
    case ErrorCode::kNoVisiblePoints: return "NoVisiblePoints";
    case ErrorCode::kUnknownImage: return "UnknownImage";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptyAfterCrop: return "EmptyAfterCrop";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kChecksumFailure: return "ChecksumFailure";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptySparseSet: return "EmptySparseSet";
    case ErrorCode::kMissingPredictions: return "MissingPredictions";
    case ErrorCode::kEmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::kEmptyErrors: return "EmptyErrors";
    case ErrorCode::kConfidenceRequired: return "ConfidenceRequired";
    case ErrorCode::kAllZeroDifferences: return "AllZeroDifferences";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyModel: return "EmptyModel";
    case ErrorCode::kVersionConflict: return "VersionConflict";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kNotFound: return "NotFound";
  }
  return "Unknown";
}

uint32_t Crc32(std::span<const uint8_t> bytes, uint32_t crc) {
  // zlib takes a uInt length; feed in chunks for very large buffers.
  const uint8_t* data = bytes.data();
  size_t remaining = bytes.size();
  uLong value = crc;
  while (remaining > 0) {
    const uInt chunk =
        static_cast<uInt>(std::min<size_t>(remaining, 1u << 30));
    value = ::crc32(value, data, chunk);
    data += chunk;
    remaining -= chunk;
  }
  return static_cast<uint32_t>(value);
}

uint64_t Fnv1a64(std::string_view text) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    hash ^= static_cast<uint8_t>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Fail(ErrorCode::kIoError, "cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  if (size > 0 &&
      !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
    Fail(ErrorCode::kIoError, "read failed for " + path.string());
  }
  return bytes;
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::span<const uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::random_device rd;
  const std::filesystem::path tmp =
      path.string() + ".tmp" + std::to_string(::getpid()) + "_" +
      std::to_string(rd());
  {
    std::FILE* file = std::fopen(tmp.c_str(), "wb");
    if (file == nullptr) {
      Fail(ErrorCode::kIoError, "cannot create " + tmp.string());
    }
    const size_t written =
        bytes.empty() ? 0 : std::fwrite(bytes.data(), 1, bytes.size(), file);
    const bool ok = written == bytes.size() && std::fflush(file) == 0 &&
                    ::fsync(::fileno(file)) == 0;
    std::fclose(file);
    if (!ok) {
      std::filesystem::remove(tmp);
      Fail(ErrorCode::kIoError, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    Fail(ErrorCode::kIoError,
         "rename to " + path.string() + " failed: " + ec.message());
  }
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view text) {
  WriteFileAtomic(path, std::span<const uint8_t>(
                            reinterpret_cast<const uint8_t*>(text.data()),
                            text.size()));
}

std::string ToLowerUtf8(std::string_view text) {
  std::string out(text);
  for (size_t i = 0; i < out.size(); ++i) {
    const auto c = static_cast<unsigned char>(out[i]);
    if (c >= 'A' && c <= 'Z') {
      out[i] = static_cast<char>(c - 'A' + 'a');
    } else if (c == 0xC3 && i + 1 < out.size()) {
      // U+00C0..U+00DE (except U+00D7) lowercase by adding 0x20.
      const auto next = static_cast<unsigned char>(out[i + 1]);
      if (next >= 0x80 && next <= 0x9E && next != 0x97) {
        out[i + 1] = static_cast<char>(next + 0x20);
      }
      ++i;
    }
  }
  return out;
}

std::string_view TrimWhitespace(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const size_t begin = text.find_first_not_of(kSpace);
  if (begin == std::string_view::npos) {
    return {};
  }
  const size_t end = text.find_last_not_of(kSpace);
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string_view> SplitWhitespace(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  std::vector<std::string_view> tokens;
  size_t pos = 0;
  while (true) {
    pos = text.find_first_not_of(kSpace, pos);
    if (pos == std::string_view::npos) {
      break;
    }
    size_t end = text.find_first_of(kSpace, pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    tokens.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

std::string FormatDouble(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace c3
