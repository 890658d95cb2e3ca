#include "vslam/frontend/mask_ops.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "vslam/error.hpp"

namespace vslam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Column pass of the Felzenszwalb–Huttenlocher squared distance transform:
// lower envelope of the parabolas q -> (y-q)² + f[q], skipping empty (inf)
// entries. Exact in O(n).
void dt1d(const std::vector<double>& f, int n, std::vector<double>& d,
          std::vector<int>& v, std::vector<double>& z) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s = 0.0;
    while (k >= 0) {
      s = ((f[q] + static_cast<double>(q) * q) -
           (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
      if (s <= z[k])
        --k;
      else
        break;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill_n(d.begin(), n, kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

std::size_t DynamicMask::count() const {
  return static_cast<std::size_t>(
      std::accumulate(bits.begin(), bits.end(), std::size_t{0}));
}

DynamicMask build_dynamic_mask(const InstanceMaskRaster& masks,
                               const DynamicClassSet& dyn) {
  DynamicMask out = DynamicMask::zeros(masks.width, masks.height);
  if (dyn.empty()) return out;
  // instance-id -> dynamic flag, so the per-pixel scan is a table lookup
  std::vector<std::uint8_t> id_is_dyn(65536, 0);
  for (const auto& inst : masks.instances)
    if (dyn.count(inst.class_id)) id_is_dyn[inst.instance_id] = 1;
  const std::size_t n = masks.ids.size();
  for (std::size_t i = 0; i < n; ++i) out.bits[i] = id_is_dyn[masks.ids[i]];
  return out;
}

std::vector<double> squared_distance_transform(const DynamicMask& sites) {
  const int w = sites.width, h = sites.height;
  std::vector<double> dist(static_cast<std::size_t>(w) * h);

  // Row pass: two linear scans give the distance to the nearest site in the
  // same row (or inf when the row is empty).
  for (int y = 0; y < h; ++y) {
    double* row = dist.data() + static_cast<std::size_t>(y) * w;
    const std::uint8_t* bits = sites.bits.data() + static_cast<std::size_t>(y) * w;
    double run = kInf;
    for (int x = 0; x < w; ++x) {
      run = bits[x] ? 0.0 : run + 1.0;
      row[x] = run;
    }
    run = kInf;
    for (int x = w - 1; x >= 0; --x) {
      run = bits[x] ? 0.0 : run + 1.0;
      row[x] = std::min(row[x], run);
      row[x] = row[x] == kInf ? kInf : row[x] * row[x];
    }
  }

  // Column pass: parabola envelope over the row results.
  std::vector<double> f(h), d(h), z(static_cast<std::size_t>(h) + 1);
  std::vector<int> v(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = dist[static_cast<std::size_t>(y) * w + x];
    dt1d(f, h, d, v, z);
    for (int y = 0; y < h; ++y) dist[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  return dist;
}

DynamicMask dilate(const DynamicMask& mask, double radius_px) {
  if (radius_px < 0.0) throw ConfigError("dilate: negative radius");
  if (radius_px == 0.0) return mask;
  const auto dist = squared_distance_transform(mask);
  const double r2 = radius_px * radius_px;
  DynamicMask out = DynamicMask::zeros(mask.width, mask.height);
  for (std::size_t i = 0; i < dist.size(); ++i) out.bits[i] = dist[i] <= r2;
  return out;
}

DynamicMask erode(const DynamicMask& mask, double radius_px) {
  if (radius_px < 0.0) throw ConfigError("erode: negative radius");
  if (radius_px == 0.0) return mask;
  DynamicMask complement = mask;
  for (auto& b : complement.bits) b = !b;
  const auto dist = squared_distance_transform(complement);
  const double r2 = radius_px * radius_px;
  DynamicMask out = DynamicMask::zeros(mask.width, mask.height);
  for (std::size_t i = 0; i < dist.size(); ++i)
    out.bits[i] = mask.bits[i] && dist[i] > r2;
  return out;
}

}  // namespace vslam
