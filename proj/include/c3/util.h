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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace c3 {

// CRC-32 (IEEE 802.3 polynomial, as used by zlib and PNG).
uint32_t Crc32(std::span<const uint8_t> bytes, uint32_t crc = 0);

// 64-bit FNV-1a. Stable across platforms; used for request digests and split
// hashing.
uint64_t Fnv1a64(std::string_view text);

// SplitMix64 finalizer; a bijective mixer for combining hashes with seeds.
uint64_t Mix64(uint64_t x);

// Maps 64 random bits to a double in [0, 1).
inline double UnitInterval(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);

// Writes via a temporary sibling file and rename so readers never observe a
// partially written file.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::span<const uint8_t> bytes);
void WriteFileAtomic(const std::filesystem::path& path, std::string_view text);

// ASCII lowercasing plus the Latin-1 supplement letters in UTF-8 (e.g. "Â").
std::string ToLowerUtf8(std::string_view text);

std::string_view TrimWhitespace(std::string_view text);

// Splits on runs of whitespace.
std::vector<std::string_view> SplitWhitespace(std::string_view text);

// "%.17g": enough significant digits to round-trip any double.
std::string FormatDouble(double value);

}  // namespace c3
