#pragma once
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include "rwg/version.hpp"

namespace rwg {

// shortest decimal form that round-trips to the same double
inline std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex16(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

// comment line stamped at the top of every CSV output
inline std::string header_line(const std::string& config_hash, uint64_t seed) {
  return std::string("# rwg ") + kVersion + " config=" + config_hash +
         " seed=" + std::to_string(seed) + "\n";
}

}  // namespace rwg
