#include "core/resample.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace mmvm {
namespace {

void check_size(int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("target size must be positive");
}

}  // namespace

Image resize_bilinear(const Image& src, int width, int height) {
  check_size(width, height);
  if (src.width() == width && src.height() == height) return src;
  Image out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      std::uint8_t ch[3];
      for (int c = 0; c < 3; ++c) {
        const double top = src.channel(x0, y0, c) * (1 - wx) + src.channel(x1, y0, c) * wx;
        const double bot = src.channel(x0, y1, c) * (1 - wx) + src.channel(x1, y1, c) * wx;
        ch[c] = static_cast<std::uint8_t>(std::lround(std::clamp(top * (1 - wy) + bot * wy, 0.0, 255.0)));
      }
      out.set(x, y, {ch[0], ch[1], ch[2]});
    }
  }
  return out;
}

Mask resize_nearest(const Mask& src, int width, int height) {
  check_size(width, height);
  if (src.width() == width && src.height() == height) return src;
  Mask out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(static_cast<int>(std::floor((y + 0.5) * src.height() / height)), src.height() - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(static_cast<int>(std::floor((x + 0.5) * src.width() / width)), src.width() - 1);
      out.set(x, y, src.at(sx, sy));
    }
  }
  return out;
}

Image crop(const Image& src, int x, int y, int width, int height) {
  check_size(width, height);
  if (x < 0 || y < 0 || x + width > src.width() || y + height > src.height()) {
    throw InvalidArgument("crop window outside image");
  }
  Image out(width, height);
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) out.set(i, j, src.at(x + i, y + j));
  return out;
}

Mask crop(const Mask& src, int x, int y, int width, int height) {
  check_size(width, height);
  if (x < 0 || y < 0 || x + width > src.width() || y + height > src.height()) {
    throw InvalidArgument("crop window outside mask");
  }
  Mask out(width, height);
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) out.set(i, j, src.at(x + i, y + j));
  return out;
}

Image flip_horizontal(const Image& src) {
  Image out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) out.set(src.width() - 1 - x, y, src.at(x, y));
  return out;
}

Mask flip_horizontal(const Mask& src) {
  Mask out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) out.set(src.width() - 1 - x, y, src.at(x, y));
  return out;
}

namespace {

// Destination coordinates of source (x, y) after `turns` clockwise quarter turns.
std::pair<int, int> rotated_position(int x, int y, int w, int h, int turns) {
  switch (turns) {
    case 1: return {h - 1 - y, x};
    case 2: return {w - 1 - x, h - 1 - y};
    case 3: return {y, w - 1 - x};
    default: return {x, y};
  }
}

template <typename Grid, typename Make>
Grid rotate_grid(const Grid& src, int quarter_turns, Make make) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  const int w = src.width();
  const int h = src.height();
  Grid out = (turns % 2 == 1) ? make(h, w) : make(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto [dx, dy] = rotated_position(x, y, w, h, turns);
      out.set(dx, dy, src.at(x, y));
    }
  }
  return out;
}

}  // namespace

Image rotate_quarter(const Image& src, int quarter_turns) {
  return rotate_grid(src, quarter_turns, [](int w, int h) { return Image(w, h); });
}

Mask rotate_quarter(const Mask& src, int quarter_turns) {
  return rotate_grid(src, quarter_turns, [](int w, int h) { return Mask(w, h); });
}

Image resize_long_edge_and_pad(const Image& src, int edge) {
  check_size(edge, edge);
  const int long_side = std::max(src.width(), src.height());
  const int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(src.width()) * edge / long_side)));
  const int h = std::max(1, static_cast<int>(std::lround(static_cast<double>(src.height()) * edge / long_side)));
  const Image scaled = resize_bilinear(src, w, h);
  Image out(edge, edge, kBlack);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(x, y, scaled.at(x, y));
  return out;
}

RasterLoader file_raster_loader(std::filesystem::path root) {
  return [root = std::move(root)](const ImageRef& ref) {
    Image img = read_png(root / ref.uri);
    if (img.width() != ref.width || img.height() != ref.height) {
      throw InvalidArgument("raster " + ref.uri + " does not match declared size of image " + ref.id);
    }
    return img;
  };
}

}  // namespace mmvm
