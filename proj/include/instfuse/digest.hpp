// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

namespace instfuse {

/// 64-bit FNV-1a, used to fingerprint run inputs in the manifest. Not a
/// cryptographic hash; collisions only matter for accidental mixups.
class Fnv1a64 {
 public:
  void update(const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      state_ ^= bytes[i];
      state_ *= 0x100000001b3ull;
    }
  }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out = "fnv1a64:";
    for (int shift = 60; shift >= 0; shift -= 4) out += digits[(state_ >> shift) & 0xf];
    return out;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for digest: " + path);
  Fnv1a64 h;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  return h.hex();
}

}  // namespace instfuse
