#include "core/mask.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "core/error.hpp"

namespace mmvm {

Mask::Mask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw InvalidArgument("negative mask dimensions");
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::size_t Mask::area() const noexcept {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

std::optional<BoundingBox> Mask::bbox() const noexcept {
  BoundingBox box{width_, height_, -1, -1};
  bool any = false;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!at(x, y)) continue;
      any = true;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
    }
  }
  if (!any) return std::nullopt;
  return box;
}

std::optional<std::pair<double, double>> Mask::centroid() const noexcept {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!at(x, y)) continue;
      sx += x;
      sy += y;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return std::pair{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

Rle encode_rle(const Mask& mask) {
  Rle rle{mask.width(), mask.height(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t v : mask.cells()) {
    if (v != current) {
      rle.counts.push_back(run);
      run = 0;
      current = v;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

Mask decode_rle(const Rle& rle) {
  if (rle.width < 0 || rle.height < 0) throw ParseError("RLE with negative size");
  const std::uint64_t total = static_cast<std::uint64_t>(rle.width) * static_cast<std::uint64_t>(rle.height);
  const std::uint64_t sum = std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  if (sum != total) {
    throw ParseError("RLE counts sum to " + std::to_string(sum) + ", expected " + std::to_string(total));
  }
  for (std::size_t i = 1; i < rle.counts.size(); ++i) {
    if (rle.counts[i] == 0) throw ParseError("RLE has an empty run after the first position");
  }
  Mask mask(rle.width, rle.height);
  std::size_t pos = 0;
  bool value = false;
  for (std::uint32_t run : rle.counts) {
    if (value) {
      for (std::uint32_t k = 0; k < run; ++k) {
        const auto cell = pos + k;
        mask.set(static_cast<int>(cell % rle.width), static_cast<int>(cell / rle.width));
      }
    }
    pos += run;
    value = !value;
  }
  return mask;
}

Mask decode_column_major_rle(const std::vector<std::uint32_t>& counts, int height, int width) {
  const std::uint64_t total = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  const std::uint64_t sum = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (sum != total) throw ParseError("column-major RLE counts do not match size");
  Mask mask(width, height);
  std::uint64_t pos = 0;
  bool value = false;
  for (std::uint32_t run : counts) {
    if (value) {
      for (std::uint32_t k = 0; k < run; ++k) {
        const auto cell = pos + k;
        mask.set(static_cast<int>(cell / height), static_cast<int>(cell % height));
      }
    }
    pos += run;
    value = !value;
  }
  return mask;
}

std::vector<std::uint32_t> decode_coco_counts_string(std::string_view s) {
  std::vector<std::int64_t> counts;
  std::size_t p = 0;
  while (p < s.size()) {
    std::int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= s.size()) throw ParseError("truncated COCO RLE string");
      const int c = static_cast<int>(s[p]) - 48;
      if (c < 0 || c > 63) throw ParseError("invalid character in COCO RLE string");
      x |= static_cast<std::int64_t>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= static_cast<std::int64_t>(-1) << (5 * k);
    }
    if (counts.size() > 2) x += counts[counts.size() - 2];
    counts.push_back(x);
  }
  std::vector<std::uint32_t> out;
  out.reserve(counts.size());
  for (auto c : counts) {
    if (c < 0) throw ParseError("negative run in COCO RLE string");
    out.push_back(static_cast<std::uint32_t>(c));
  }
  return out;
}

}  // namespace mmvm
