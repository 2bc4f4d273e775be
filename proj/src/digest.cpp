#include "pacr/digest.hpp"

#include <openssl/sha.h>

#include <array>
#include <cstdio>

namespace pacr {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md.data());
  std::string out;
  out.reserve(2 * md.size());
  char buf[3];
  for (unsigned char c : md) {
    std::snprintf(buf, sizeof(buf), "%02x", c);
    out.append(buf, 2);
  }
  return out;
}

}  // namespace pacr
