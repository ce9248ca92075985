#pragma once

#include <cstdint>
#include <cstddef>
#include <string_view>
#include <compare>

#include <Eigen/Core>

namespace kgelab {

inline constexpr const char* kVersion = "0.1.0";

// All internal math runs in double; checkpoints quantize to float32 on disk.
using Real = double;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Dense integer ids into the vocabulary tables.
struct Triple {
  int s = 0;
  int r = 0;
  int o = 0;
  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// splitmix64 finalizer, used for hashing and for deriving seed streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.s)));
    h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.r)));
    h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.o)));
    return static_cast<std::size_t>(h);
  }
};

// Which slot of a triple a ranking query or an edit replaces.
enum class Side { Subject, Object, Both };

inline const char* side_name(Side s) {
  switch (s) {
    case Side::Subject: return "subject";
    case Side::Object: return "object";
    default: return "both";
  }
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace kgelab
