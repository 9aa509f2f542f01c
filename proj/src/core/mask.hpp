#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace mmvm {

struct BoundingBox {
  int x0 = 0;  // inclusive
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;
  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Binary mask, row-major, one byte per cell (0 or 1).
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool at(int x, int y) const noexcept { return cells_[index(x, y)] != 0; }
  // Out-of-range cells read as unset.
  bool at_or_zero(int x, int y) const noexcept { return contains(x, y) && at(x, y); }
  void set(int x, int y, bool v = true) noexcept { cells_[index(x, y)] = v ? 1 : 0; }

  std::size_t area() const noexcept;
  bool empty() const noexcept { return area() == 0; }
  std::optional<BoundingBox> bbox() const noexcept;
  // Mean (x, y) of set cells; nullopt for an empty mask.
  std::optional<std::pair<double, double>> centroid() const noexcept;

  const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Run-length encoding over the row-major cell sequence. Runs alternate
// 0,1,0,1,... starting with a run of zeros, which is 0 when the first cell is
// set. Every count after the first is > 0; the sum equals width*height.
struct Rle {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;
  friend bool operator==(const Rle&, const Rle&) = default;
};

Rle encode_rle(const Mask& mask);
// Throws ParseError if the counts do not describe exactly width*height cells.
Mask decode_rle(const Rle& rle);

// COCO-style RLE is column-major. These helpers ingest it into a row-major Mask.
Mask decode_column_major_rle(const std::vector<std::uint32_t>& counts, int height, int width);
// Decodes the compact string form used by COCO tooling for "counts".
std::vector<std::uint32_t> decode_coco_counts_string(std::string_view s);

}  // namespace mmvm
