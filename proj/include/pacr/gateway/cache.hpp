// cache.hpp -- content-addressed response cache on disk.
//
// Keyed by a digest of everything that determines the response (model, full
// request payload, trial salt), so repeated pipeline runs never re-bill the
// backend for a call they already made.
#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

namespace pacr::gw {

class DiskCache {
 public:
  DiskCache() = default;
  explicit DiskCache(std::string root);

  bool enabled() const { return !root_.empty(); }

  std::optional<std::string> get(const std::string& key) const;

  // Write-temp-then-rename so a concurrent reader never sees a torn entry.
  void put(const std::string& key, const std::string& value) const;

  // Digest of the parts joined with an unambiguous separator.
  static std::string key_for(std::initializer_list<std::string_view> parts);

 private:
  std::string path_for(const std::string& key) const;
  std::string root_;
};

}  // namespace pacr::gw
