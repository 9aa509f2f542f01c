#include "render/prompt_render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "render/font.hpp"

namespace mmvm::render {

Mask boundary(const Mask& mask) {
  Mask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      if (!mask.at_or_zero(x - 1, y) || !mask.at_or_zero(x + 1, y) || !mask.at_or_zero(x, y - 1) ||
          !mask.at_or_zero(x, y + 1)) {
        out.set(x, y);
      }
    }
  }
  return out;
}

Mask contour_band(const Mask& mask, int thickness) {
  if (thickness < 1) throw InvalidArgument("contour thickness must be >= 1");
  const Mask edge = boundary(mask);
  const int r = thickness - 1;
  if (r == 0) return edge;
  const int w = mask.width();
  const int h = mask.height();
  // Separable square dilation.
  Mask horiz(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!edge.at(x, y)) continue;
      for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r); ++dx) horiz.set(dx, y);
    }
  }
  Mask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!horiz.at(x, y)) continue;
      for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r); ++dy) out.set(x, dy);
    }
  }
  return out;
}

std::pair<int, int> tag_anchor(const Mask& mask) {
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) return {x, y};
    }
  }
  throw InvalidArgument("cannot anchor a tag on an empty mask");
}

BoundingBox tag_box(const Mask& mask, int tag) {
  const std::string text = std::to_string(tag);
  const int bw = text_width(text) + 2 * kTagPadding;
  const int bh = text_height() + 2 * kTagPadding;
  const int W = mask.width();
  const int H = mask.height();
  const auto [ax, ay] = tag_anchor(mask);
  const BoundingBox bb = *mask.bbox();

  auto clamp_x = [&](int x) { return std::clamp(x, 0, std::max(0, W - bw)); };
  auto clamp_y = [&](int y) { return std::clamp(y, 0, std::max(0, H - bh)); };

  int x = clamp_x(ax);
  int y = clamp_y(ay);
  if (bb.width() < kSmallObjectSide || bb.height() < kSmallObjectSide) {
    if (bb.y0 - bh >= 0) {
      x = clamp_x(bb.x0);
      y = bb.y0 - bh;
    } else if (bb.y1 + bh <= H) {
      x = clamp_x(bb.x0);
      y = bb.y1;
    } else if (bb.x1 + bw <= W) {
      x = bb.x1;
      y = clamp_y(bb.y0);
    } else if (bb.x0 - bw >= 0) {
      x = bb.x0 - bw;
      y = clamp_y(bb.y0);
    }
  }
  return BoundingBox{x, y, std::min(x + bw, W), std::min(y + bh, H)};
}

Image render_prompts(const Image& image, std::span<const PromptedObject> objects) {
  std::set<int> tags;
  std::set<Rgb> colors;
  for (const auto& obj : objects) {
    const Mask& m = obj.mask.get();
    if (m.width() != image.width() || m.height() != image.height()) {
      throw InvalidArgument("mask size differs from image size");
    }
    if (obj.spec.object_tag < 1) throw InvalidArgument("object tags must be positive");
    if (obj.spec.contour_thickness < 1) throw InvalidArgument("contour thickness must be >= 1");
    if (obj.spec.tag_background_color != obj.spec.contour_color) {
      throw InvalidArgument("tag background must equal contour color");
    }
    if (!tags.insert(obj.spec.object_tag).second) {
      throw InvalidArgument("duplicate object tag " + std::to_string(obj.spec.object_tag));
    }
    if (!colors.insert(obj.spec.contour_color).second) throw InvalidArgument("duplicate contour color");
    if (m.empty()) throw InvalidArgument("cannot render a prompt for an empty mask");
  }

  Image out = image;
  for (const auto& obj : objects) {
    const Mask band = contour_band(obj.mask.get(), obj.spec.contour_thickness);
    for (int y = 0; y < band.height(); ++y)
      for (int x = 0; x < band.width(); ++x)
        if (band.at(x, y)) out.set(x, y, obj.spec.contour_color);
  }
  for (const auto& obj : objects) {
    const BoundingBox box = tag_box(obj.mask.get(), obj.spec.object_tag);
    for (int y = box.y0; y < box.y1; ++y)
      for (int x = box.x0; x < box.x1; ++x) out.set(x, y, obj.spec.tag_background_color);
    draw_text(out, box.x0 + kTagPadding, box.y0 + kTagPadding, std::to_string(obj.spec.object_tag),
              obj.spec.tag_text_color, box);
  }
  return out;
}

Image concat_vertical(std::span<const Image> images) {
  if (images.empty()) throw InvalidArgument("concat_vertical needs at least one image");
  int width = 0;
  int height = 0;
  for (const auto& img : images) {
    width = std::max(width, img.width());
    height += img.height();
  }
  Image out(width, height, kBlack);
  int y0 = 0;
  for (const auto& img : images) {
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) out.set(x, y0 + y, img.at(x, y));
    y0 += img.height();
  }
  return out;
}

std::vector<Rgb> default_palette(int n) {
  if (n < 1 || n > kMaxPaletteSize) {
    throw InvalidArgument("palette size must be in [1, " + std::to_string(kMaxPaletteSize) + "]");
  }
  // Grid colors at 64-step levels are at least 63 apart per channel when they
  // differ; keep saturated, bright ones, most saturated first, then by hue.
  static const std::vector<Rgb> kPalette = [] {
    constexpr int kLevels[] = {0, 64, 128, 192, 255};
    struct Entry {
      Rgb c;
      int sat;
      int hi;
      double hue;
    };
    std::vector<Entry> entries;
    for (int r : kLevels)
      for (int g : kLevels)
        for (int b : kLevels) {
          const int hi = std::max({r, g, b});
          const int lo = std::min({r, g, b});
          if (hi - lo < 128 || hi < 192) continue;
          double hue;
          const double d = hi - lo;
          if (hi == r) hue = std::fmod((g - b) / d + 6.0, 6.0);
          else if (hi == g) hue = (b - r) / d + 2.0;
          else hue = (r - g) / d + 4.0;
          entries.push_back({{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                              static_cast<std::uint8_t>(b)},
                             hi - lo, hi, hue});
        }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.sat != b.sat) return a.sat > b.sat;
      if (a.hi != b.hi) return a.hi > b.hi;
      if (a.hue != b.hue) return a.hue < b.hue;
      return a.c < b.c;
    });
    std::vector<Rgb> out;
    for (const auto& e : entries) out.push_back(e.c);
    return out;
  }();
  return {kPalette.begin(), kPalette.begin() + n};
}

std::vector<Image> render_question(const DatasetManifest& manifest, const MatchingQuestion& question,
                                   const RasterLoader& loader, const QuestionRenderOptions& options) {
  std::vector<Image> out;
  out.reserve(question.image_ids.size());
  for (const auto& image_id : question.image_ids) {
    const ImageEntry* entry = manifest.find_image(image_id);
    if (!entry) throw InvalidArgument("question " + question.id + " references unknown image " + image_id);
    std::vector<PromptedObject> prompted;
    auto add = [&](const ObjectReferral& r) {
      if (r.mode != ReferringMode::VisualPrompt || r.image_id != image_id || !r.prompt) return;
      const SegmentedObject* obj = manifest.find_object(r.image_id, r.track_id);
      if (!obj) throw InvalidArgument("question " + question.id + " references unknown object " + r.track_id);
      prompted.push_back({std::cref(obj->mask), *r.prompt});
    };
    add(question.query);
    for (const auto& o : question.options) add(o.referral);
    Image edited = render_prompts(loader(entry->ref), prompted);
    if (options.resize_long_edge > 0) edited = resize_long_edge_and_pad(edited, options.resize_long_edge);
    out.push_back(std::move(edited));
  }
  return out;
}

std::string edited_image_name(std::string_view question_id, std::size_t k) {
  std::string safe;
  for (char c : question_id) {
    safe.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  }
  // The hash keeps ids that sanitize to the same string apart.
  char hash[9];
  std::snprintf(hash, sizeof hash, "%08x", static_cast<unsigned>(fnv1a64(question_id) & 0xffffffffu));
  return safe + "_" + hash + "_" + std::to_string(k) + ".png";
}

}  // namespace mmvm::render
