#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "vslam/io/formats.hpp"

namespace vslam {

/// Semantic class ids designated dynamic.
using DynamicClassSet = std::set<std::uint16_t>;

/// Binary per-pixel mask of (dilated) dynamic content.
struct DynamicMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1 per pixel, row-major

  static DynamicMask zeros(int w, int h) {
    DynamicMask m;
    m.width = w;
    m.height = h;
    m.bits.assign(static_cast<std::size_t>(w) * h, 0);
    return m;
  }
  bool test(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool on = true) {
    bits[static_cast<std::size_t>(y) * width + x] = on ? 1 : 0;
  }
  std::size_t count() const;
};

/// Union of the instance masks whose class is in `dyn`.
DynamicMask build_dynamic_mask(const InstanceMaskRaster& masks,
                               const DynamicClassSet& dyn);

// Morphology with an exact Euclidean disk: a pixel is within the element
// iff dx² + dy² ≤ radius². Implemented via an exact squared distance
// transform, so the cost is linear in the pixel count for any radius.
// The element is clipped at image borders.
DynamicMask dilate(const DynamicMask& mask, double radius_px);
DynamicMask erode(const DynamicMask& mask, double radius_px);

/// Squared Euclidean distance from every pixel to the nearest set pixel
/// (exact; unset-free images give +inf everywhere).
std::vector<double> squared_distance_transform(const DynamicMask& sites);

}  // namespace vslam
