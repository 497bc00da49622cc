#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace edvcm {

inline constexpr std::string_view kVersion = "0.1.0";

// FNV-1a, used for the config hash stamped into output headers. Stable
// across platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash_hex(std::string_view canonical_config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_config)));
  return std::string(buf);
}

// Comment line placed at the top of every output file.
inline std::string file_stamp(std::string_view canonical_config) {
  std::string out = "# edvcm ";
  out += kVersion;
  out += " config=";
  out += config_hash_hex(canonical_config);
  return out;
}

}  // namespace edvcm
