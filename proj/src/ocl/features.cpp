#include "ocl/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/rng.hpp"

namespace mmvm::ocl {

FeatureMap::FeatureMap(int c, int h, int w, int s)
    : channels(c), height(h), width(w), stride(s),
      data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0.0) {
  if (c < 1 || h < 1 || w < 1 || s < 1) throw InvalidArgument("feature map dimensions must be positive");
}

int grid_extent(int pixels, int stride) { return (pixels + stride - 1) / stride; }

std::vector<std::size_t> pooled_cells(const Mask& mask, int stride) {
  if (stride < 1) throw InvalidArgument("stride must be positive");
  const int gh = grid_extent(mask.height(), stride);
  const int gw = grid_extent(mask.width(), stride);
  std::vector<int> hits(static_cast<std::size_t>(gh) * gw, 0);
  std::size_t total = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      ++hits[static_cast<std::size_t>(y / stride) * gw + x / stride];
      ++total;
    }
  }
  if (total == 0) throw InvalidArgument("cannot pool an empty mask");
  std::vector<std::size_t> cells;
  for (int cy = 0; cy < gh; ++cy) {
    const int ch = std::min(stride, mask.height() - cy * stride);
    for (int cx = 0; cx < gw; ++cx) {
      const int cw = std::min(stride, mask.width() - cx * stride);
      const std::size_t i = static_cast<std::size_t>(cy) * gw + cx;
      if (2 * hits[i] >= ch * cw) cells.push_back(i);
    }
  }
  if (cells.empty()) {
    const auto [mx, my] = *mask.centroid();
    const int cx = std::min(static_cast<int>(mx) / stride, gw - 1);
    const int cy = std::min(static_cast<int>(my) / stride, gh - 1);
    cells.push_back(static_cast<std::size_t>(cy) * gw + cx);
  }
  return cells;
}

std::vector<double> masked_average_pool(const FeatureMap& fm, const Mask& mask) {
  if (grid_extent(mask.height(), fm.stride) != fm.height || grid_extent(mask.width(), fm.stride) != fm.width) {
    throw InvalidArgument("mask size does not match feature map grid");
  }
  const auto cells = pooled_cells(mask, fm.stride);
  std::vector<double> out(static_cast<std::size_t>(fm.channels), 0.0);
  for (std::size_t i : cells) {
    const double* v = fm.data.data() + i * static_cast<std::size_t>(fm.channels);
    for (int c = 0; c < fm.channels; ++c) out[static_cast<std::size_t>(c)] += v[c];
  }
  const double n = static_cast<double>(cells.size());
  for (double& v : out) v /= n;
  return out;
}

RffEncoder::RffEncoder(std::string name, Statistics stats, int stride, int dim, double bandwidth, std::uint64_t seed)
    : name_(std::move(name)), stats_(stats), stride_(stride), dim_(dim),
      input_dim_(stats == Statistics::Color ? 6 : 8) {
  if (stride < 1 || dim < 1 || !(bandwidth > 0)) throw InvalidArgument("invalid encoder configuration");
  Rng rng(seed);
  weights_.resize(static_cast<std::size_t>(dim) * input_dim_);
  for (double& w : weights_) w = rng.normal() / bandwidth;
  bias_.resize(static_cast<std::size_t>(dim));
  for (double& b : bias_) b = rng.uniform(0.0, 2.0 * std::numbers::pi);
}

namespace {

double luminance(const Image& im, int x, int y) {
  x = std::clamp(x, 0, im.width() - 1);
  y = std::clamp(y, 0, im.height() - 1);
  const Rgb p = im.at(x, y);
  return (0.299 * p.r + 0.587 * p.g + 0.114 * p.b) / 255.0;
}

}  // namespace

std::vector<double> RffEncoder::cell_statistics(const Image& image, int cy, int cx) const {
  const int x0 = cx * stride_;
  const int y0 = cy * stride_;
  const int x1 = std::min(x0 + stride_, image.width());
  const int y1 = std::min(y0 + stride_, image.height());
  double sum[4] = {0, 0, 0, 0};
  double sq[4] = {0, 0, 0, 0};
  const bool grad = stats_ == Statistics::ColorGradient;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const Rgb p = image.at(x, y);
      const double v[3] = {p.r / 255.0, p.g / 255.0, p.b / 255.0};
      for (int c = 0; c < 3; ++c) {
        sum[c] += v[c];
        sq[c] += v[c] * v[c];
      }
      if (grad) {
        const double gx = (luminance(image, x + 1, y) - luminance(image, x - 1, y)) / 2.0;
        const double gy = (luminance(image, x, y + 1) - luminance(image, x, y - 1)) / 2.0;
        const double g = std::sqrt(gx * gx + gy * gy);
        sum[3] += g;
        sq[3] += g * g;
      }
    }
  }
  const double n = static_cast<double>((x1 - x0) * (y1 - y0));
  const int channels = grad ? 4 : 3;
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(input_dim_));
  for (int c = 0; c < channels; ++c) f.push_back(sum[c] / n);
  for (int c = 0; c < channels; ++c) {
    const double mean = sum[c] / n;
    f.push_back(std::sqrt(std::max(0.0, sq[c] / n - mean * mean)));
  }
  return f;
}

FeatureMap RffEncoder::encode(const Image& image) const {
  if (image.width() < 1 || image.height() < 1) throw InvalidArgument("cannot encode an empty image");
  FeatureMap fm(dim_, grid_extent(image.height(), stride_), grid_extent(image.width(), stride_), stride_);
  const double scale = std::sqrt(2.0 / dim_);
  for (int cy = 0; cy < fm.height; ++cy) {
    for (int cx = 0; cx < fm.width; ++cx) {
      const auto f = cell_statistics(image, cy, cx);
      auto out = fm.cell(cy, cx);
      for (int d = 0; d < dim_; ++d) {
        double z = bias_[static_cast<std::size_t>(d)];
        const double* w = weights_.data() + static_cast<std::size_t>(d) * input_dim_;
        for (int k = 0; k < input_dim_; ++k) z += w[k] * f[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(d)] = scale * std::cos(z);
      }
    }
  }
  return fm;
}

std::string RffEncoder::parameter_hash() const {
  std::string blob = name_;
  blob.push_back('\0');
  const std::int32_t header[4] = {static_cast<std::int32_t>(stats_), stride_, dim_, input_dim_};
  blob.append(reinterpret_cast<const char*>(header), sizeof header);
  blob.append(reinterpret_cast<const char*>(weights_.data()), weights_.size() * sizeof(double));
  blob.append(reinterpret_cast<const char*>(bias_.data()), bias_.size() * sizeof(double));
  return sha256_hex(std::string_view(blob));
}

std::unique_ptr<RffEncoder> make_base_encoder(std::uint64_t seed, int dim) {
  return std::make_unique<RffEncoder>("base-rff-color-s8", RffEncoder::Statistics::Color, 8, dim, 0.25, seed);
}

std::unique_ptr<RffEncoder> make_expert_encoder(std::uint64_t seed, int dim) {
  return std::make_unique<RffEncoder>("expert-rff-colorgrad-s4", RffEncoder::Statistics::ColorGradient, 4, dim, 0.25,
                                      seed);
}

}  // namespace mmvm::ocl
