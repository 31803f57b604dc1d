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

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "c3/align_service.h"
#include "c3/error.h"
#include "c3/json_convert.h"
#include "c3/util.h"

namespace c3 {
namespace {

constexpr char kJournalMagic[4] = {'C', '3', 'A', 'J'};
constexpr size_t kFrameOverhead = 12;  // magic + length + CRC

void WriteAll(int fd, const uint8_t* data, size_t size) {
  while (size > 0) {
    const ssize_t n = ::write(fd, data, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      Fail(ErrorCode::kIoError, std::string("journal write failed: ") + std::strerror(errno));
    }
    data += n;
    size -= static_cast<size_t>(n);
  }
}

}  // namespace

nlohmann::json AlignmentRecordToJson(const AlignmentRecord& r) {
  return {{"scene_id", r.key.scene_id},
          {"component_id", r.key.component_id},
          {"plan_id", r.key.plan_id},
          {"similarity", ToJson(r.similarity)},
          {"rectification", r.rectification ? ToJson(*r.rectification) : nlohmann::json()},
          {"annotator", r.annotator},
          {"timestamp", r.timestamp},
          {"version", r.version}};
}

AlignmentRecord AlignmentRecordFromJson(const nlohmann::json& j) {
  AlignmentRecord r;
  r.key.scene_id = Require<std::string>(j, "scene_id");
  r.key.component_id = Require<std::string>(j, "component_id");
  r.key.plan_id = Require<std::string>(j, "plan_id");
  r.similarity = SimilarityFromJson(Require<nlohmann::json>(j, "similarity"));
  if (j.contains("rectification") && !j["rectification"].is_null()) {
    r.rectification = Matrix3FromJson(j["rectification"]);
  }
  r.annotator = Require<std::string>(j, "annotator");
  r.timestamp = Require<int64_t>(j, "timestamp");
  r.version = Require<uint64_t>(j, "version");
  return r;
}

std::string AlignmentKey::ToString() const {
  return scene_id + "/" + component_id + "/" + plan_id;
}

void ValidateRecord(const AlignmentRecord& record) {
  for (const std::string* id :
       {&record.key.scene_id, &record.key.component_id, &record.key.plan_id}) {
    if (id->empty()) Fail(ErrorCode::kValidationError, "alignment key has an empty id");
  }
  const SimilarityTransform2D& s = record.similarity;
  if (!(s.scale() > 0) || !std::isfinite(s.scale()) || !std::isfinite(s.theta()) ||
      !std::isfinite(s.tx()) || !std::isfinite(s.ty())) {
    Fail(ErrorCode::kValidationError, "similarity parameters are invalid", {"similarity"});
  }
  if (record.rectification && !IsRotation(*record.rectification, 1e-6)) {
    Fail(ErrorCode::kValidationError, "rectification is not a rotation",
         {"rectification"});
  }
}

std::vector<uint8_t> EncodeJournalRecord(const AlignmentRecord& record) {
  const std::string payload = AlignmentRecordToJson(record).dump();
  std::vector<uint8_t> out(kJournalMagic, kJournalMagic + 4);
  const auto size = static_cast<uint32_t>(payload.size());
  out.insert(out.end(), reinterpret_cast<const uint8_t*>(&size),
             reinterpret_cast<const uint8_t*>(&size) + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uint32_t crc = Crc32(
      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(payload.data()), payload.size()));
  out.insert(out.end(), reinterpret_cast<const uint8_t*>(&crc),
             reinterpret_cast<const uint8_t*>(&crc) + 4);
  return out;
}

AlignmentStore::AlignmentStore(std::filesystem::path journal, Clock clock,
                               bool sync_writes)
    : journal_(std::move(journal)), clock_(std::move(clock)), sync_writes_(sync_writes) {
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::seconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (journal_.has_parent_path()) std::filesystem::create_directories(journal_.parent_path());
  fd_ = ::open(journal_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    Fail(ErrorCode::kIoError,
         "cannot open journal " + journal_.string() + ": " + std::strerror(errno));
  }
  Replay();
}

AlignmentStore::~AlignmentStore() {
  if (fd_ >= 0) ::close(fd_);
}

void AlignmentStore::Replay() {
  const std::vector<uint8_t> bytes = ReadFileBytes(journal_);
  size_t pos = 0;
  while (bytes.size() - pos >= kFrameOverhead) {
    if (std::memcmp(bytes.data() + pos, kJournalMagic, 4) != 0) break;
    uint32_t size = 0;
    std::memcpy(&size, bytes.data() + pos + 4, 4);
    if (bytes.size() - pos - kFrameOverhead < size) break;
    const std::span<const uint8_t> payload(bytes.data() + pos + 8, size);
    uint32_t crc = 0;
    std::memcpy(&crc, bytes.data() + pos + 8 + size, 4);
    if (Crc32(payload) != crc) break;
    AlignmentRecord record;
    try {
      record = AlignmentRecordFromJson(nlohmann::json::parse(payload.begin(), payload.end()));
    } catch (const std::exception&) {
      break;
    }
    latest_[record.key] = std::move(record);
    pos += kFrameOverhead + size;
  }
  truncated_bytes_ = bytes.size() - pos;
  if (truncated_bytes_ > 0 && ::ftruncate(fd_, static_cast<off_t>(pos)) != 0) {
    Fail(ErrorCode::kIoError, "cannot truncate torn journal tail");
  }
  if (::lseek(fd_, 0, SEEK_END) < 0) Fail(ErrorCode::kIoError, "journal seek failed");
}

AlignmentRecord AlignmentStore::Put(AlignmentRecord record,
                                    std::optional<uint64_t> expected_version) {
  ValidateRecord(record);
  std::unique_lock lock(mutex_);
  const auto it = latest_.find(record.key);
  const uint64_t current = it == latest_.end() ? 0 : it->second.version;
  if (expected_version && *expected_version != current) {
    Fail(ErrorCode::kVersionConflict,
         "expected version " + std::to_string(*expected_version) + " but " +
             record.key.ToString() + " is at " + std::to_string(current),
         {std::to_string(current)});
  }
  record.version = current + 1;
  record.timestamp = clock_();
  const std::vector<uint8_t> frame = EncodeJournalRecord(record);
  const off_t before = ::lseek(fd_, 0, SEEK_END);
  try {
    WriteAll(fd_, frame.data(), frame.size());
    if (sync_writes_ && ::fdatasync(fd_) != 0) {
      Fail(ErrorCode::kIoError, "journal sync failed");
    }
  } catch (const Error&) {
    // Drop the partial frame so later appends stay reachable on replay.
    if (before >= 0 && ::ftruncate(fd_, before) == 0) ::lseek(fd_, before, SEEK_SET);
    throw;
  }
  latest_[record.key] = record;
  return record;
}

std::optional<AlignmentRecord> AlignmentStore::Get(const AlignmentKey& key) const {
  std::shared_lock lock(mutex_);
  const auto it = latest_.find(key);
  if (it == latest_.end()) return std::nullopt;
  return it->second;
}

std::vector<AlignmentRecord> AlignmentStore::List() const {
  std::shared_lock lock(mutex_);
  std::vector<AlignmentRecord> out;
  for (const auto& [key, record] : latest_) out.push_back(record);
  return out;
}

}  // namespace c3
