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

#include <atomic>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "c3/align_service.h"
#include "c3/error.h"
#include "c3/util.h"
#include "test_util.h"

namespace c3 {
namespace {

AlignmentRecord Record(const std::string& plan, double s) {
  AlignmentRecord r;
  r.key = {"scene", "c0", plan};
  r.similarity = SimilarityTransform2D(s, 0.25, 10, -3);
  r.annotator = "ann";
  return r;
}

AlignmentStore::Clock FixedClock(int64_t t) {
  return [t] { return t; };
}

TEST(AlignmentStore, VersionsIncrement) {
  testing::TempDir dir;
  AlignmentStore store(dir / "j.log", FixedClock(1000), false);
  EXPECT_FALSE(store.Get({"scene", "c0", "p"}).has_value());
  const AlignmentRecord v1 = store.Put(Record("p", 2));
  EXPECT_EQ(v1.version, 1u);
  EXPECT_EQ(v1.timestamp, 1000);
  const AlignmentRecord v2 = store.Put(Record("p", 3), 1);
  EXPECT_EQ(v2.version, 2u);
  EXPECT_EQ(store.Get(v2.key), v2);
  EXPECT_EQ(store.Put(Record("q", 3), 0).version, 1u);
  EXPECT_EQ(store.List().size(), 2u);
}

TEST(AlignmentStore, StaleExpectedVersionConflicts) {
  testing::TempDir dir;
  AlignmentStore store(dir / "j.log", FixedClock(1), false);
  store.Put(Record("p", 2));
  try {
    store.Put(Record("p", 5), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionConflict);
    ASSERT_EQ(e.details().size(), 1u);
    EXPECT_EQ(e.details()[0], "1");
  }
  EXPECT_EQ(store.Get({"scene", "c0", "p"})->similarity.scale(), 2);
}

TEST(AlignmentStore, InvalidRecordsRejected) {
  testing::TempDir dir;
  AlignmentStore store(dir / "j.log", FixedClock(1), false);
  AlignmentRecord empty = Record("", 1);
  EXPECT_THROW(store.Put(empty), Error);
  AlignmentRecord skew = Record("p", 1);
  skew.rectification = Eigen::Matrix3d::Identity() * 2;
  EXPECT_THROW(store.Put(skew), Error);
  EXPECT_TRUE(store.List().empty());
}

TEST(AlignmentStore, ReplayRestoresLatestPerKey) {
  testing::TempDir dir;
  std::vector<AlignmentRecord> last;
  {
    AlignmentStore store(dir / "j.log", FixedClock(5), false);
    store.Put(Record("a", 1));
    store.Put(Record("b", 1));
    AlignmentRecord with_rect = Record("a", 4);
    with_rect.rectification = QuaternionToRotationMatrix(Eigen::Vector4d(0.5, 0.5, 0.5, 0.5));
    store.Put(with_rect, 1);
    last = store.List();
  }
  AlignmentStore reopened(dir / "j.log", FixedClock(6), false);
  EXPECT_EQ(reopened.List(), last);
  EXPECT_EQ(reopened.truncated_bytes(), 0u);
  EXPECT_EQ(reopened.Put(Record("a", 9), 2).version, 3u);
}

TEST(AlignmentStore, TornTailTruncatedAtEveryOffset) {
  testing::TempDir dir;
  std::vector<size_t> boundaries = {0};
  std::vector<AlignmentRecord> stored;
  {
    AlignmentStore store(dir / "full.log", FixedClock(7), false);
    for (int i = 0; i < 3; ++i) {
      stored.push_back(store.Put(Record(i == 1 ? "b" : "a", 1 + i)));
      boundaries.push_back(std::filesystem::file_size(dir / "full.log"));
    }
  }
  const std::vector<uint8_t> full = ReadFileBytes(dir / "full.log");
  ASSERT_EQ(full.size(), boundaries.back());
  for (size_t cut = 0; cut <= full.size(); ++cut) {
    const auto path = dir / "cut.log";
    WriteFileAtomic(path, std::span(full).first(cut));
    size_t complete = 0;
    while (complete + 1 < boundaries.size() && boundaries[complete + 1] <= cut) ++complete;
    AlignmentStore store(path, FixedClock(8), false);
    EXPECT_EQ(store.truncated_bytes(), cut - boundaries[complete]) << cut;
    EXPECT_EQ(std::filesystem::file_size(path), boundaries[complete]);
    std::map<AlignmentKey, AlignmentRecord> expect;
    for (size_t i = 0; i < complete; ++i) expect[stored[i].key] = stored[i];
    std::vector<AlignmentRecord> expect_list;
    for (const auto& [k, v] : expect) expect_list.push_back(v);
    ASSERT_EQ(store.List(), expect_list) << cut;
    // Appends after recovery survive the next replay.
    const AlignmentRecord next = store.Put(Record("z", 1));
    AlignmentStore again(path, FixedClock(9), false);
    EXPECT_EQ(again.Get(next.key), next);
    EXPECT_EQ(again.truncated_bytes(), 0u);
  }
}

TEST(AlignmentStore, CorruptFrameStopsReplay) {
  testing::TempDir dir;
  {
    AlignmentStore store(dir / "j.log", FixedClock(1), false);
    store.Put(Record("a", 1));
    store.Put(Record("b", 1));
  }
  std::vector<uint8_t> bytes = ReadFileBytes(dir / "j.log");
  bytes[bytes.size() - 10] ^= 0xFF;  // inside the second payload
  WriteFileAtomic(dir / "j.log", bytes);
  AlignmentStore store(dir / "j.log", FixedClock(1), false);
  EXPECT_EQ(store.List().size(), 1u);
  EXPECT_GT(store.truncated_bytes(), 0u);
}

TEST(AlignmentStore, FrameLayout) {
  const AlignmentRecord r = Record("p", 2);
  const std::vector<uint8_t> frame = EncodeJournalRecord(r);
  EXPECT_EQ(std::string(frame.begin(), frame.begin() + 4), "C3AJ");
  uint32_t len;
  std::memcpy(&len, frame.data() + 4, 4);
  ASSERT_EQ(frame.size(), 12u + len);
  const auto j = nlohmann::json::parse(frame.begin() + 8, frame.begin() + 8 + len);
  EXPECT_EQ(AlignmentRecordFromJson(j), r);
  uint32_t crc;
  std::memcpy(&crc, frame.data() + 8 + len, 4);
  EXPECT_EQ(crc, Crc32(std::span(frame).subspan(8, len)));
}

TEST(AlignmentStore, ConcurrentPutsWithSameExpectedVersion) {
  testing::TempDir dir;
  AlignmentStore store(dir / "j.log", FixedClock(1), false);
  for (int round = 0; round < 20; ++round) {
    const uint64_t expected = static_cast<uint64_t>(round);
    std::atomic<int> ok{0}, conflicts{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        try {
          store.Put(Record("p", 1 + t), expected);
          ++ok;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kVersionConflict) ++conflicts;
        }
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(ok.load(), 1);
    EXPECT_EQ(conflicts.load(), 7);
  }
  AlignmentStore replayed(dir / "j.log", FixedClock(1), false);
  EXPECT_EQ(replayed.Get({"scene", "c0", "p"})->version, 20u);
}

}  // namespace
}  // namespace c3
