#include "pseudo/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/resample.hpp"
#include "core/rng.hpp"
#include "core/synthetic_scene.hpp"
#include "json.hpp"

namespace mmvm::pseudo {

void validate(const AugmentationConfig& c) {
  if (!(c.crop_scale_lo > 0) || !(c.crop_scale_lo <= c.crop_scale_hi) || !(c.crop_scale_hi <= 1.0)) {
    throw InvalidArgument("crop scale range must satisfy 0 < lo <= hi <= 1");
  }
  if (c.resize_target < 0) throw InvalidArgument("resize_target must be >= 0");
  if (!(c.hflip_prob >= 0 && c.hflip_prob <= 1)) throw InvalidArgument("hflip_prob must be in [0, 1]");
  if (c.arbitrary_rotation_max_degrees < 0 || !std::isfinite(c.arbitrary_rotation_max_degrees)) {
    throw InvalidArgument("arbitrary rotation bound must be finite and >= 0");
  }
  if (c.arbitrary_rotation_max_degrees == 0) {
    if (c.rotation_degrees.empty()) throw InvalidArgument("rotation set must be non-empty");
    for (int d : c.rotation_degrees) {
      if (d % 90 != 0) throw InvalidArgument("rotation set must hold right angles");
    }
  }
  if (c.visibility_threshold < 1) throw InvalidArgument("visibility threshold must be >= 1");
}

TransformParams sample_transform(int width, int height, const AugmentationConfig& config, Rng& rng) {
  TransformParams t;
  const double scale = std::sqrt(rng.uniform(config.crop_scale_lo, config.crop_scale_hi));
  t.crop_width = std::clamp(static_cast<int>(std::lround(width * scale)), 1, width);
  t.crop_height = std::clamp(static_cast<int>(std::lround(height * scale)), 1, height);
  t.crop_x = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(width - t.crop_width + 1)));
  t.crop_y = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(height - t.crop_height + 1)));
  if (config.resize_target > 0) {
    const double f = static_cast<double>(config.resize_target) / std::max(t.crop_width, t.crop_height);
    t.resized_width = std::max(1, static_cast<int>(std::lround(t.crop_width * f)));
    t.resized_height = std::max(1, static_cast<int>(std::lround(t.crop_height * f)));
  } else {
    t.resized_width = t.crop_width;
    t.resized_height = t.crop_height;
  }
  t.flip = config.hflip_prob > 0 && rng.bernoulli(config.hflip_prob);
  if (config.arbitrary_rotation_max_degrees > 0) {
    t.rotation_degrees = rng.uniform(-config.arbitrary_rotation_max_degrees, config.arbitrary_rotation_max_degrees);
  } else {
    t.rotation_degrees = config.rotation_degrees[rng.uniform_index(config.rotation_degrees.size())];
  }
  const int turns = static_cast<int>(std::lround(t.rotation_degrees / 90.0));
  const bool quarter = std::abs(t.rotation_degrees - 90.0 * turns) < 1e-12;
  const bool swap = quarter && (((turns % 4) + 4) % 4) % 2 == 1;
  t.output_width = swap ? t.resized_height : t.resized_width;
  t.output_height = swap ? t.resized_width : t.resized_height;
  return t;
}

namespace {

std::optional<int> quarter_turns(double degrees) {
  const long turns = std::lround(degrees / 90.0);
  if (std::abs(degrees - 90.0 * static_cast<double>(turns)) > 1e-12) return std::nullopt;
  return static_cast<int>(((turns % 4) + 4) % 4);
}

// Inverse rotation about the image center: output pixel center -> source
// coordinates, clockwise-positive angle in image (y-down) coordinates.
std::pair<double, double> unrotate(double x, double y, int w, int h, double degrees) {
  const double th = degrees * std::numbers::pi / 180.0;
  const double cx = w / 2.0;
  const double cy = h / 2.0;
  const double dx = x - cx;
  const double dy = y - cy;
  return {cx + dx * std::cos(th) + dy * std::sin(th), cy - dx * std::sin(th) + dy * std::cos(th)};
}

Image rotate_any(const Image& src, double degrees) {
  Image out(src.width(), src.height(), kBlack);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const auto [sx, sy] = unrotate(x + 0.5, y + 0.5, src.width(), src.height(), degrees);
      const double fx = sx - 0.5;
      const double fy = sy - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const int y0 = static_cast<int>(std::floor(fy));
      if (x0 < -1 || y0 < -1 || x0 >= src.width() || y0 >= src.height()) continue;
      const double wx = fx - x0;
      const double wy = fy - y0;
      std::uint8_t ch[3];
      for (int c = 0; c < 3; ++c) {
        auto px = [&](int xx, int yy) -> double {
          return src.contains(xx, yy) ? src.channel(xx, yy, c) : 0.0;
        };
        const double v = (px(x0, y0) * (1 - wx) + px(x0 + 1, y0) * wx) * (1 - wy) +
                         (px(x0, y0 + 1) * (1 - wx) + px(x0 + 1, y0 + 1) * wx) * wy;
        ch[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
      out.set(x, y, {ch[0], ch[1], ch[2]});
    }
  }
  return out;
}

Mask rotate_any(const Mask& src, double degrees) {
  Mask out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const auto [sx, sy] = unrotate(x + 0.5, y + 0.5, src.width(), src.height(), degrees);
      const int ix = static_cast<int>(std::floor(sx));
      const int iy = static_cast<int>(std::floor(sy));
      if (src.at_or_zero(ix, iy)) out.set(x, y);
    }
  }
  return out;
}

template <typename Grid>
Grid finish(Grid g, const TransformParams& t) {
  if (t.flip) g = flip_horizontal(g);
  if (const auto turns = quarter_turns(t.rotation_degrees)) return rotate_quarter(g, *turns);
  return rotate_any(g, t.rotation_degrees);
}

}  // namespace

Image apply_transform(const Image& image, const TransformParams& t) {
  Image g = crop(image, t.crop_x, t.crop_y, t.crop_width, t.crop_height);
  g = resize_bilinear(g, t.resized_width, t.resized_height);
  return finish(std::move(g), t);
}

Mask apply_transform(const Mask& mask, const TransformParams& t) {
  Mask g = crop(mask, t.crop_x, t.crop_y, t.crop_width, t.crop_height);
  g = resize_nearest(g, t.resized_width, t.resized_height);
  return finish(std::move(g), t);
}

std::optional<std::pair<int, int>> source_pixel(const TransformParams& t, int x, int y, int src_width,
                                                int src_height) {
  // Undo rotation.
  int rx, ry;
  if (const auto turns = quarter_turns(t.rotation_degrees)) {
    const int w = t.resized_width;
    const int h = t.resized_height;
    switch (*turns) {
      case 1: rx = y; ry = h - 1 - x; break;
      case 2: rx = w - 1 - x; ry = h - 1 - y; break;
      case 3: rx = w - 1 - y; ry = x; break;
      default: rx = x; ry = y; break;
    }
  } else {
    const auto [sx, sy] = unrotate(x + 0.5, y + 0.5, t.resized_width, t.resized_height, t.rotation_degrees);
    rx = static_cast<int>(std::floor(sx));
    ry = static_cast<int>(std::floor(sy));
    if (rx < 0 || ry < 0 || rx >= t.resized_width || ry >= t.resized_height) return std::nullopt;
  }
  if (t.flip) rx = t.resized_width - 1 - rx;
  // Undo nearest resize, then crop.
  const int cx = std::min(static_cast<int>(std::floor((rx + 0.5) * t.crop_width / t.resized_width)), t.crop_width - 1);
  const int cy =
      std::min(static_cast<int>(std::floor((ry + 0.5) * t.crop_height / t.resized_height)), t.crop_height - 1);
  const int sx = t.crop_x + cx;
  const int sy = t.crop_y + cy;
  if (sx < 0 || sy < 0 || sx >= src_width || sy >= src_height) return std::nullopt;
  return std::pair{sx, sy};
}

namespace {

PseudoView make_view(const Image& image, const std::vector<SegmentedObject>& objects, const TransformParams& t,
                     int threshold, const std::string& view_name) {
  PseudoView view;
  view.transform = t;
  view.image = apply_transform(image, t);
  for (const auto& obj : objects) {
    Mask m = apply_transform(obj.mask, t);
    if (m.area() < static_cast<std::size_t>(threshold)) continue;
    view.objects.push_back({obj.track_id, view_name, std::move(m), obj.category});
  }
  return view;
}

}  // namespace

PseudoPair simulate_pair(const Image& image, const std::vector<SegmentedObject>& objects,
                         const AugmentationConfig& config, const std::string& source_id) {
  validate(config);
  std::set<std::string> tracks;
  for (const auto& obj : objects) {
    if (obj.mask.width() != image.width() || obj.mask.height() != image.height()) {
      throw InvalidArgument("mask size differs from image size");
    }
    if (obj.mask.empty()) throw InvalidArgument("empty mask for track " + obj.track_id);
    if (!tracks.insert(obj.track_id).second) throw InvalidArgument("duplicate track " + obj.track_id);
  }
  Rng rng(config.seed);
  const TransformParams ta = sample_transform(image.width(), image.height(), config, rng);
  const TransformParams tb = sample_transform(image.width(), image.height(), config, rng);
  PseudoPair pair;
  pair.source_id = source_id;
  pair.seed = config.seed;
  pair.view_a = make_view(image, objects, ta, config.visibility_threshold, "a");
  pair.view_b = make_view(image, objects, tb, config.visibility_threshold, "b");
  std::set<std::string> in_a;
  for (const auto& o : pair.view_a.objects) in_a.insert(o.track_id);
  for (const auto& o : pair.view_b.objects) {
    if (in_a.contains(o.track_id)) pair.correspondence.push_back(o.track_id);
  }
  std::sort(pair.correspondence.begin(), pair.correspondence.end());
  if (pair.correspondence.empty()) throw NoCorrespondenceError("no surviving correspondence");
  return pair;
}

PseudoPair pretrain_pair(const std::vector<CorpusImage>& corpus, const AugmentationConfig& config, std::size_t index) {
  if (corpus.empty()) throw InvalidArgument("pre-training corpus is empty");
  constexpr int kMaxResamples = 16;
  const CorpusImage& item = corpus[index % corpus.size()];
  const std::uint64_t base = derive_seed(config.seed, static_cast<std::uint64_t>(index));
  AugmentationConfig c = config;
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    c.seed = derive_seed(base, static_cast<std::uint64_t>(attempt));
    try {
      return simulate_pair(item.image, item.objects, c, item.id);
    } catch (const NoCorrespondenceError&) {
    }
  }
  throw NoCorrespondenceError("no surviving correspondence for " + item.id + " after resampling");
}

std::vector<PseudoPair> build_pretrain_stream(const std::vector<CorpusImage>& corpus, const AugmentationConfig& config,
                                              std::size_t count, int concurrency) {
  if (corpus.empty()) throw InvalidArgument("pre-training corpus is empty");
  std::vector<PseudoPair> out(count);
  parallel_for(count, concurrency, [&](std::size_t i) { out[i] = pretrain_pair(corpus, config, i); });
  return out;
}

std::string transform_to_json(const TransformParams& t) {
  return nlohmann::json{{"crop", {t.crop_x, t.crop_y, t.crop_width, t.crop_height}},
                        {"resized", {t.resized_width, t.resized_height}},
                        {"flip", t.flip},
                        {"rotation_degrees", t.rotation_degrees},
                        {"output", {t.output_width, t.output_height}}}
      .dump();
}

std::vector<CorpusImage> make_shapes_corpus(int count, std::uint64_t seed, const ShapesCorpusConfig& config) {
  if (count < 0) throw InvalidArgument("corpus size must be >= 0");
  if (config.min_objects < 1 || config.max_objects < config.min_objects ||
      config.max_objects > static_cast<int>(synthetic_object_colors().size())) {
    throw InvalidArgument("object count range is invalid");
  }
  const auto colors = synthetic_object_colors();
  std::vector<CorpusImage> corpus;
  corpus.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const int span = config.max_size - config.min_size + 1;
    const int w = config.min_size + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(span)));
    const int h = config.min_size + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(span)));
    const int n = config.min_objects +
                  static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(config.max_objects - config.min_objects + 1)));
    std::vector<std::size_t> order(colors.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    rng.shuffle(std::span(order));
    std::vector<ShapeInstance> shapes;
    for (int k = 0; k < n; ++k) {
      ShapeInstance s;
      s.track_id = "o" + std::to_string(k);
      s.kind = static_cast<ShapeKind>(rng.uniform_index(5));
      s.radius = rng.uniform(0.07, 0.15) * std::min(w, h) + 3.0;
      s.aspect = rng.uniform(0.5, 1.0);
      s.angle = rng.uniform(0.0, std::numbers::pi);
      s.cx = rng.uniform(s.radius, w - s.radius);
      s.cy = rng.uniform(s.radius, h - s.radius);
      s.color = colors[order[static_cast<std::size_t>(k)]];
      shapes.push_back(s);
    }
    char id[24];
    std::snprintf(id, sizeof id, "img%05d", i);
    RenderedScene scene = render_scene(w, h, random_scene_style(derive_seed(seed, std::string("style/") + id)), shapes, id);
    CorpusImage item{id, std::move(scene.image), {}};
    for (auto& obj : scene.objects) {
      if (obj.mask.area() >= static_cast<std::size_t>(config.min_visible_area)) item.objects.push_back(std::move(obj));
    }
    corpus.push_back(std::move(item));
  }
  return corpus;
}

}  // namespace mmvm::pseudo
