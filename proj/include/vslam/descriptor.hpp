#pragma once

#include <array>
#include <bit>
#include <cstdint>

namespace vslam {

/// 256-bit binary feature descriptor stored as four 64-bit words.
/// Word i holds bits [64*i, 64*i+63], bit k of a word is (word >> k) & 1.
struct Descriptor {
  std::array<std::uint64_t, 4> words{0, 0, 0, 0};

  bool operator==(const Descriptor&) const = default;

  bool bit(int index) const {
    return (words[static_cast<unsigned>(index) >> 6] >>
            (static_cast<unsigned>(index) & 63u)) &
           1u;
  }

  void flip_bit(int index) {
    words[static_cast<unsigned>(index) >> 6] ^=
        std::uint64_t{1} << (static_cast<unsigned>(index) & 63u);
  }
};

inline int hamming_distance(const Descriptor& a, const Descriptor& b) {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(a.words[i] ^ b.words[i]);
  return d;
}

}  // namespace vslam
