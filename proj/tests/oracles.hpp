#pragma once

// Straight-line reference implementations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/mask.hpp"
#include "ocl/features.hpp"

namespace mmvm::test {

// A cell is in the band when some mask cell with an outside 4-neighbour lies
// within Chebyshev distance thickness-1.
inline Mask band_oracle(const Mask& m, int thickness) {
  const int w = m.width(), h = m.height();
  auto edge = [&](int x, int y) {
    if (!m.at(x, y)) return false;
    const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k], ny = y + dy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h || !m.at(nx, ny)) return true;
    }
    return false;
  };
  Mask out(w, h);
  const int r = thickness - 1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int by = std::max(0, y - r); by <= std::min(h - 1, y + r) && !out.at(x, y); ++by)
        for (int bx = std::max(0, x - r); bx <= std::min(w - 1, x + r); ++bx)
          if (edge(bx, by)) {
            out.set(x, y);
            break;
          }
  return out;
}

// Walks the grid and counts mask pixels per cell directly.
inline std::vector<double> pool_oracle(const ocl::FeatureMap& fm, const Mask& m) {
  const int s = fm.stride;
  std::vector<double> sum(static_cast<std::size_t>(fm.channels), 0.0);
  int n = 0;
  for (int cy = 0; cy < fm.height; ++cy) {
    for (int cx = 0; cx < fm.width; ++cx) {
      int hits = 0, pixels = 0;
      for (int y = cy * s; y < std::min((cy + 1) * s, m.height()); ++y)
        for (int x = cx * s; x < std::min((cx + 1) * s, m.width()); ++x) {
          ++pixels;
          hits += m.at(x, y);
        }
      if (2 * hits >= pixels) {
        for (int c = 0; c < fm.channels; ++c) sum[static_cast<std::size_t>(c)] += fm.cell(cy, cx)[static_cast<std::size_t>(c)];
        ++n;
      }
    }
  }
  if (n == 0) {
    double mx = 0, my = 0, cnt = 0;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (m.at(x, y)) {
          mx += x;
          my += y;
          ++cnt;
        }
    const int cx = std::min(static_cast<int>(mx / cnt) / s, fm.width - 1);
    const int cy = std::min(static_cast<int>(my / cnt) / s, fm.height - 1);
    for (int c = 0; c < fm.channels; ++c) sum[static_cast<std::size_t>(c)] = fm.cell(cy, cx)[static_cast<std::size_t>(c)];
    n = 1;
  }
  for (double& v : sum) v /= n;
  return sum;
}

// Kept frame for tick j is the first frame with k/fps >= j*interval, i.e.
// ceil(j*interval*fps) clamped to the last frame.
inline std::vector<std::size_t> tick_oracle(std::size_t n, double fps, double interval) {
  std::vector<std::size_t> out;
  if (n == 0) return out;
  const double last = static_cast<double>(n - 1) / fps;
  for (int j = 0; j * interval <= last + 1e-9; ++j) {
    auto k = static_cast<std::size_t>(std::ceil(j * interval * fps - 1e-9));
    k = std::min(k, n - 1);
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

}  // namespace mmvm::test
