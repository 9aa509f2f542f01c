#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/mask.hpp"
#include "core/raster.hpp"

namespace mmvm::ocl {

// Grid of C-vectors, row-major cells; cell (y, x) covers input pixels
// [y*stride, (y+1)*stride) x [x*stride, (x+1)*stride) clipped to the image.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  int stride = 1;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, int stride);

  std::span<double> cell(int y, int x) {
    return {data.data() + (static_cast<std::size_t>(y) * width + x) * channels, static_cast<std::size_t>(channels)};
  }
  std::span<const double> cell(int y, int x) const {
    return {data.data() + (static_cast<std::size_t>(y) * width + x) * channels, static_cast<std::size_t>(channels)};
  }
};

// Grid size covering `pixels` input pixels at `stride` (ceil division).
int grid_extent(int pixels, int stride);

// Cells selected for a mask: cell kept when the mask covers at least half of
// the cell's in-image pixels; if none qualify, the cell holding the mask
// centroid. Row-major cell indices. Throws InvalidArgument on an empty mask.
std::vector<std::size_t> pooled_cells(const Mask& mask, int stride);

// Mean feature over pooled_cells(mask, fm.stride). The mask is at input
// resolution and its grid extent must equal the map's.
std::vector<double> masked_average_pool(const FeatureMap& fm, const Mask& mask);

class VisionEncoder {
 public:
  virtual ~VisionEncoder() = default;
  virtual std::string name() const = 0;
  virtual int output_dim() const = 0;
  virtual int stride() const = 0;
  virtual FeatureMap encode(const Image& image) const = 0;
  // SHA-256 over the encoder's parameters.
  virtual std::string parameter_hash() const = 0;
};

// Frozen random-Fourier-feature encoder over per-cell statistics:
// sqrt(2/D) * cos(W f + b), W ~ N(0, 1/bandwidth^2), b ~ U[0, 2pi).
class RffEncoder final : public VisionEncoder {
 public:
  enum class Statistics {
    Color,          // mean and std of RGB
    ColorGradient,  // mean and std of RGB, mean and std of luminance gradient magnitude
  };

  RffEncoder(std::string name, Statistics stats, int stride, int dim, double bandwidth, std::uint64_t seed);

  std::string name() const override { return name_; }
  int output_dim() const override { return dim_; }
  int stride() const override { return stride_; }
  FeatureMap encode(const Image& image) const override;
  std::string parameter_hash() const override;

  int input_dim() const noexcept { return input_dim_; }
  // Per-cell statistics before projection.
  std::vector<double> cell_statistics(const Image& image, int cy, int cx) const;

 private:
  std::string name_;
  Statistics stats_;
  int stride_;
  int dim_;
  int input_dim_;
  std::vector<double> weights_;  // dim x input_dim
  std::vector<double> bias_;
};

// Built-in stand-ins: coarse color encoder at stride 8 and a finer
// color+gradient encoder at stride 4.
std::unique_ptr<RffEncoder> make_base_encoder(std::uint64_t seed = 11, int dim = 64);
std::unique_ptr<RffEncoder> make_expert_encoder(std::uint64_t seed = 23, int dim = 96);

}  // namespace mmvm::ocl
