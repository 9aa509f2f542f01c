#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/raster.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"

namespace mmvm::pseudo {

struct AugmentationConfig {
  double crop_scale_lo = 0.6;  // crop area as a fraction of the image area
  double crop_scale_hi = 1.0;
  int resize_target = 0;       // long edge after resize; 0 keeps the crop size
  double hflip_prob = 0.5;
  std::vector<int> rotation_degrees = {0, 90, 180, 270};
  // When > 0, rotation angle is uniform in [-max, max] degrees instead of
  // drawn from rotation_degrees; output keeps the resized size.
  double arbitrary_rotation_max_degrees = 0.0;
  int visibility_threshold = 16;  // minimum transformed mask area, pixels
  std::uint64_t seed = 0;
};

// Throws InvalidArgument describing the first bad field.
void validate(const AugmentationConfig& config);

struct TransformParams {
  int crop_x = 0;
  int crop_y = 0;
  int crop_width = 0;
  int crop_height = 0;
  int resized_width = 0;
  int resized_height = 0;
  bool flip = false;
  double rotation_degrees = 0;  // clockwise
  int output_width = 0;
  int output_height = 0;
  friend bool operator==(const TransformParams&, const TransformParams&) = default;
};

TransformParams sample_transform(int width, int height, const AugmentationConfig& config, Rng& rng);

// crop -> resize (bilinear) -> flip -> rotate.
Image apply_transform(const Image& image, const TransformParams& t);
// crop -> resize (nearest) -> flip -> rotate; stays binary.
Mask apply_transform(const Mask& mask, const TransformParams& t);

// Source pixel that output pixel (x, y) of a nearest-neighbour transformed
// grid reads from, or nullopt when it falls outside the source.
std::optional<std::pair<int, int>> source_pixel(const TransformParams& t, int x, int y, int src_width, int src_height);

struct PseudoView {
  Image image;
  std::vector<SegmentedObject> objects;  // objects visible in this view
  TransformParams transform;
};

struct PseudoPair {
  std::string source_id;
  std::uint64_t seed = 0;
  PseudoView view_a;
  PseudoView view_b;
  std::vector<std::string> correspondence;  // tracks visible in both views, sorted
};

class NoCorrespondenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two independent transform chains drawn from config.seed.
PseudoPair simulate_pair(const Image& image, const std::vector<SegmentedObject>& objects,
                         const AugmentationConfig& config, const std::string& source_id = {});

struct CorpusImage {
  std::string id;
  Image image;
  std::vector<SegmentedObject> objects;
};

// Pair `index` of the stream: corpus item index % size with a seed derived
// from (config.seed, index); resamples with further derived seeds when no
// correspondence survives.
PseudoPair pretrain_pair(const std::vector<CorpusImage>& corpus, const AugmentationConfig& config, std::size_t index);

std::vector<PseudoPair> build_pretrain_stream(const std::vector<CorpusImage>& corpus, const AugmentationConfig& config,
                                              std::size_t count, int concurrency = 1);

// JSON object describing a transform, for logs.
std::string transform_to_json(const TransformParams& t);

struct ShapesCorpusConfig {
  int min_size = 64;
  int max_size = 256;
  int min_objects = 4;
  int max_objects = 8;
  int min_visible_area = 24;
};

// Colored geometric shapes on textured backgrounds; objects in one image
// have distinct colors.
std::vector<CorpusImage> make_shapes_corpus(int count, std::uint64_t seed, const ShapesCorpusConfig& config = {});

}  // namespace mmvm::pseudo
