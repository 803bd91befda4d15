#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qinf {

using cx = std::complex<double>;

// All user-facing failures (bad input files, parameter violations,
// unsupported structures) are reported through this type.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

}  // namespace qinf
