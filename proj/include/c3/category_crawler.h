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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace c3 {

// Client side of the media-repository crawl. The network transport is
// injected; everything above it (caching, rate limiting, category traversal,
// response parsing) lives here and is tested offline.

struct FetchResponse {
  int status = 0;
  std::string body;
};

using Transport = std::function<FetchResponse(const std::string& url)>;

// One file per request digest holding the body verbatim, plus a sidecar
// "<digest>.meta.json" with url, timestamp and status. Writes are atomic.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string Digest(const std::string& url);

  std::optional<FetchResponse> Get(const std::string& url) const;
  void Put(const std::string& url, const FetchResponse& response,
           int64_t unix_seconds);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// Spaces successive Acquire() calls at least 1/rate apart. Clock and sleep
// are injectable for tests.
class RateLimiter {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;
  using Sleep = std::function<void(std::chrono::nanoseconds)>;

  explicit RateLimiter(double requests_per_second = 1.0, Clock clock = {},
                       Sleep sleep = {});

  void Acquire();

 private:
  std::chrono::nanoseconds interval_;
  Clock clock_;
  Sleep sleep_;
  std::optional<std::chrono::steady_clock::time_point> last_;
  std::mutex mutex_;
};

// Cache-first fetcher; network requests are serialized and rate limited.
class CachedFetcher {
 public:
  CachedFetcher(Transport transport, ResponseCache* cache,
                RateLimiter* limiter,
                std::function<int64_t()> now_seconds = {});

  FetchResponse Fetch(const std::string& url);

  size_t network_requests() const { return network_requests_; }

 private:
  Transport transport_;
  ResponseCache* cache_;
  RateLimiter* limiter_;
  std::function<int64_t()> now_seconds_;
  std::mutex mutex_;
  size_t network_requests_ = 0;
};

struct CategoryListing {
  std::vector<std::string> subcategories;  // without "Category:" prefix
  std::vector<std::string> files;
};

using CategoryLister = std::function<CategoryListing(const std::string&)>;

struct CategoryTraversal {
  // (category, depth) in breadth-first visiting order.
  std::vector<std::pair<std::string, int>> visited;
  // Files in discovery order, deduplicated.
  std::vector<std::string> files;
};

inline constexpr int kDefaultCategoryDepth = 12;

// Breadth-first over subcategories with a visited set; categories deeper
// than `max_depth` below the root are not expanded.
CategoryTraversal TraverseCategories(const std::string& root,
                                     const CategoryLister& lister,
                                     int max_depth = kDefaultCategoryDepth);

// MediaWiki "categorymembers" query URL for one page of a category.
std::string CategoryMembersUrl(const std::string& api_base,
                               const std::string& category,
                               const std::string& continue_token = "");

// Parses a categorymembers JSON response. Appends to `listing`; returns the
// continuation token, empty when the listing is complete.
std::string ParseCategoryMembers(const std::string& body,
                                 CategoryListing& listing);

// Lister backed by a fetcher against a MediaWiki API endpoint, following
// continuation tokens.
CategoryLister MediaWikiLister(CachedFetcher& fetcher, std::string api_base);

}  // namespace c3
