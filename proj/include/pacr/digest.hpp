// digest.hpp -- SHA-256 content digests (hex), used for cache keys,
// curve/policy fingerprints and manifest input hashes.
#pragma once

#include <string>
#include <string_view>

namespace pacr {

std::string sha256_hex(std::string_view bytes);

}  // namespace pacr
