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

#include "c3/category_crawler.h"

#include <cstdio>
#include <deque>
#include <set>
#include <thread>

#include "c3/error.h"
#include "c3/util.h"
#include "json.hpp"

namespace c3 {
namespace {

std::string PercentEncode(const std::string& text) {
  std::string out;
  for (const unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else if (c == ' ') {
      out.push_back('_');
    } else {
      char buffer[4];
      std::snprintf(buffer, sizeof(buffer), "%%%02X", c);
      out += buffer;
    }
  }
  return out;
}

std::string StripNamespace(const std::string& title, std::string_view ns) {
  if (title.starts_with(ns)) return title.substr(ns.size());
  return title;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string ResponseCache::Digest(const std::string& url) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(url)));
  return buffer;
}

std::optional<FetchResponse> ResponseCache::Get(const std::string& url) const {
  const std::string digest = Digest(url);
  const std::filesystem::path body_path = dir_ / digest;
  const std::filesystem::path meta_path = dir_ / (digest + ".meta.json");
  if (!std::filesystem::exists(body_path) || !std::filesystem::exists(meta_path)) {
    return std::nullopt;
  }
  const std::vector<uint8_t> meta_bytes = ReadFileBytes(meta_path);
  const nlohmann::json meta = nlohmann::json::parse(
      meta_bytes.begin(), meta_bytes.end(), nullptr, /*allow_exceptions=*/false);
  // Digest collisions: only trust an entry recorded for this exact url.
  if (!meta.is_object() || meta.value("url", "") != url) return std::nullopt;
  const std::vector<uint8_t> body = ReadFileBytes(body_path);
  return FetchResponse{meta.value("status", 0),
                       std::string(body.begin(), body.end())};
}

void ResponseCache::Put(const std::string& url, const FetchResponse& response,
                        int64_t unix_seconds) {
  const std::string digest = Digest(url);
  WriteFileAtomic(dir_ / digest, response.body);
  const nlohmann::json meta = {
      {"url", url}, {"timestamp", unix_seconds}, {"status", response.status}};
  WriteFileAtomic(dir_ / (digest + ".meta.json"), meta.dump(2) + "\n");
}

RateLimiter::RateLimiter(double requests_per_second, Clock clock, Sleep sleep)
    : clock_(clock ? std::move(clock) : Clock(&std::chrono::steady_clock::now)),
      sleep_(sleep ? std::move(sleep)
                   : Sleep([](std::chrono::nanoseconds d) {
                       std::this_thread::sleep_for(d);
                     })) {
  if (!(requests_per_second > 0)) {
    Fail(ErrorCode::kInvalidArgument, "rate limit must be positive");
  }
  interval_ = std::chrono::nanoseconds(
      static_cast<int64_t>(1e9 / requests_per_second));
}

void RateLimiter::Acquire() {
  std::lock_guard lock(mutex_);
  auto now = clock_();
  if (last_) {
    const auto ready = *last_ + interval_;
    if (now < ready) {
      sleep_(ready - now);
      now = ready;
    }
  }
  last_ = now;
}

CachedFetcher::CachedFetcher(Transport transport, ResponseCache* cache,
                             RateLimiter* limiter,
                             std::function<int64_t()> now_seconds)
    : transport_(std::move(transport)),
      cache_(cache),
      limiter_(limiter),
      now_seconds_(now_seconds ? std::move(now_seconds) : [] {
        return static_cast<int64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
      }) {}

FetchResponse CachedFetcher::Fetch(const std::string& url) {
  if (cache_ != nullptr) {
    if (std::optional<FetchResponse> hit = cache_->Get(url)) return *hit;
  }
  std::lock_guard lock(mutex_);
  if (cache_ != nullptr) {
    // Another thread may have filled it while we waited.
    if (std::optional<FetchResponse> hit = cache_->Get(url)) return *hit;
  }
  if (limiter_ != nullptr) limiter_->Acquire();
  FetchResponse response = transport_(url);
  ++network_requests_;
  if (cache_ != nullptr && response.status >= 200 && response.status < 300) {
    cache_->Put(url, response, now_seconds_());
  }
  return response;
}

CategoryTraversal TraverseCategories(const std::string& root,
                                     const CategoryLister& lister,
                                     int max_depth) {
  CategoryTraversal result;
  std::set<std::string> seen_categories{root};
  std::set<std::string> seen_files;
  std::deque<std::pair<std::string, int>> queue{{root, 0}};
  while (!queue.empty()) {
    auto [category, depth] = queue.front();
    queue.pop_front();
    result.visited.emplace_back(category, depth);
    const CategoryListing listing = lister(category);
    for (const std::string& file : listing.files) {
      if (seen_files.insert(file).second) result.files.push_back(file);
    }
    if (depth >= max_depth) continue;
    for (const std::string& sub : listing.subcategories) {
      if (seen_categories.insert(sub).second) queue.emplace_back(sub, depth + 1);
    }
  }
  return result;
}

std::string CategoryMembersUrl(const std::string& api_base,
                               const std::string& category,
                               const std::string& continue_token) {
  std::string url = api_base +
                    "?action=query&list=categorymembers&cmtype=subcat|file"
                    "&cmlimit=500&format=json&cmtitle=Category:" +
                    PercentEncode(category);
  if (!continue_token.empty()) url += "&cmcontinue=" + PercentEncode(continue_token);
  return url;
}

std::string ParseCategoryMembers(const std::string& body,
                                 CategoryListing& listing) {
  const nlohmann::json doc =
      nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.contains("query")) {
    Fail(ErrorCode::kMalformedText, "unexpected categorymembers response");
  }
  for (const auto& member : doc["query"].value("categorymembers", nlohmann::json::array())) {
    const std::string title = member.value("title", "");
    const int ns = member.value("ns", -1);
    if (ns == 14) {
      listing.subcategories.push_back(StripNamespace(title, "Category:"));
    } else if (ns == 6) {
      listing.files.push_back(title);
    }
  }
  if (doc.contains("continue") && doc["continue"].contains("cmcontinue")) {
    return doc["continue"]["cmcontinue"].get<std::string>();
  }
  return "";
}

CategoryLister MediaWikiLister(CachedFetcher& fetcher, std::string api_base) {
  return [&fetcher, api_base = std::move(api_base)](const std::string& category) {
    CategoryListing listing;
    std::string token;
    do {
      const FetchResponse response =
          fetcher.Fetch(CategoryMembersUrl(api_base, category, token));
      if (response.status < 200 || response.status >= 300) {
        Fail(ErrorCode::kIoError, "category '" + category + "' fetch failed with " +
                                      std::to_string(response.status));
      }
      token = ParseCategoryMembers(response.body, listing);
    } while (!token.empty());
    return listing;
  };
}

}  // namespace c3
