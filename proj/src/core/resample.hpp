#pragma once

#include <filesystem>
#include <functional>

#include "core/mask.hpp"
#include "core/raster.hpp"
#include "core/types.hpp"

namespace mmvm {

// Pixel-center aligned: dst (x+0.5) maps to src (x+0.5)*src/dst. Same-size
// resizes are exact copies.
Image resize_bilinear(const Image& src, int width, int height);
Mask resize_nearest(const Mask& src, int width, int height);

Image crop(const Image& src, int x, int y, int width, int height);
Mask crop(const Mask& src, int x, int y, int width, int height);

Image flip_horizontal(const Image& src);
Mask flip_horizontal(const Mask& src);

// Clockwise rotation by quarter turns (0..3). Output of a W x H input is H x W
// for odd turns.
Image rotate_quarter(const Image& src, int quarter_turns);
Mask rotate_quarter(const Mask& src, int quarter_turns);

// Scales so the long edge equals `edge`, then pads right/bottom with black to
// edge x edge.
Image resize_long_edge_and_pad(const Image& src, int edge);

using RasterLoader = std::function<Image(const ImageRef&)>;

// Loads PNGs from `root / uri`.
RasterLoader file_raster_loader(std::filesystem::path root);

}  // namespace mmvm
