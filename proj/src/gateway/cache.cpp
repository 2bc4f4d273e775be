#include "pacr/gateway/cache.hpp"

#include <filesystem>
#include <fstream>

#include "pacr/digest.hpp"
#include "pacr/errors.hpp"

namespace pacr::gw {

namespace fs = std::filesystem;

DiskCache::DiskCache(std::string root) : root_(std::move(root)) {
  if (!root_.empty()) fs::create_directories(root_);
}

std::string DiskCache::key_for(std::initializer_list<std::string_view> parts) {
  std::string joined;
  for (const auto& p : parts) {
    joined.append(p);
    joined.push_back('\x1f');
  }
  return sha256_hex(joined);
}

std::string DiskCache::path_for(const std::string& key) const {
  // Two-character shard keeps directories small on large corpora.
  return (fs::path(root_) / key.substr(0, 2) / (key + ".json")).string();
}

std::optional<std::string> DiskCache::get(const std::string& key) const {
  if (!enabled()) return std::nullopt;
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void DiskCache::put(const std::string& key, const std::string& value) const {
  if (!enabled()) return;
  const fs::path final_path = path_for(key);
  fs::create_directories(final_path.parent_path());
  const fs::path tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestError("cache: cannot write '" + tmp.string() + "'", 0);
    out.write(value.data(), static_cast<std::streamsize>(value.size()));
  }
  fs::rename(tmp, final_path);
}

}  // namespace pacr::gw
