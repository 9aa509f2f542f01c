#include "core/synthetic_scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "core/rng.hpp"

namespace mmvm {

std::string_view to_string(ShapeKind k) noexcept {
  switch (k) {
    case ShapeKind::Circle: return "circle";
    case ShapeKind::Rectangle: return "rectangle";
    case ShapeKind::Triangle: return "triangle";
    case ShapeKind::Ellipse: return "ellipse";
    case ShapeKind::Diamond: return "diamond";
  }
  return "shape";
}

bool shape_contains(const ShapeInstance& s, double x, double y) noexcept {
  const double dx = x - s.cx;
  const double dy = y - s.cy;
  const double c = std::cos(s.angle);
  const double sn = std::sin(s.angle);
  const double u = (dx * c + dy * sn) / s.radius;
  const double v = (-dx * sn + dy * c) / s.radius;
  switch (s.kind) {
    case ShapeKind::Circle: return u * u + v * v <= 1.0;
    case ShapeKind::Ellipse: return u * u + (v * v) / (s.aspect * s.aspect) <= 1.0;
    case ShapeKind::Rectangle: return std::abs(u) <= 1.0 && std::abs(v) <= s.aspect;
    case ShapeKind::Diamond: return std::abs(u) + std::abs(v) <= 1.0;
    case ShapeKind::Triangle:
      // Upward triangle inscribed in the unit circle.
      return v <= 0.5 && v >= -1.0 + 1.732050808 * std::abs(u) && std::abs(u) <= 0.866025404;
  }
  return false;
}

namespace {

std::uint8_t clamp_channel(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

}  // namespace

RenderedScene render_scene(int width, int height, const SceneStyle& style, std::span<const ShapeInstance> shapes,
                           const std::string& frame_id) {
  Rng rng(style.texture_seed);
  RenderedScene scene;
  scene.image = Image(width, height);
  // Smooth diagonal gradient with per-pixel noise.
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double t = (static_cast<double>(x) / std::max(1, width - 1) + static_cast<double>(y) / std::max(1, height - 1)) / 2.0;
      const int noise = static_cast<int>(rng.uniform_index(2 * style.texture_amplitude + 1)) - style.texture_amplitude;
      auto mixc = [&](std::uint8_t a, std::uint8_t b) {
        return clamp_channel(static_cast<int>(std::lround(a + (b - a) * t)) + noise);
      };
      scene.image.set(x, y, {mixc(style.background_a.r, style.background_b.r),
                             mixc(style.background_a.g, style.background_b.g),
                             mixc(style.background_a.b, style.background_b.b)});
    }
  }
  // owner[i] = index of the top-most shape covering pixel i, or -1.
  std::vector<int> owner(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), -1);
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const auto& shape = shapes[s];
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (!shape_contains(shape, x + 0.5, y + 0.5)) continue;
        owner[static_cast<std::size_t>(y) * width + x] = static_cast<int>(s);
        const int noise = static_cast<int>(rng.uniform_index(2 * style.object_noise + 1)) - style.object_noise;
        scene.image.set(x, y, {clamp_channel(shape.color.r + noise), clamp_channel(shape.color.g + noise),
                               clamp_channel(shape.color.b + noise)});
      }
    }
  }
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    Mask mask(width, height);
    bool any = false;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (owner[static_cast<std::size_t>(y) * width + x] == static_cast<int>(s)) {
          mask.set(x, y);
          any = true;
        }
      }
    }
    if (!any) continue;
    scene.objects.push_back({shapes[s].track_id, frame_id, std::move(mask), std::string(to_string(shapes[s].kind))});
  }
  return scene;
}

std::span<const Rgb> synthetic_object_colors() noexcept {
  static constexpr std::array<Rgb, 16> kColors = {{
      {230, 25, 25},   {25, 200, 40},   {30, 60, 230},  {240, 220, 20}, {230, 30, 220}, {20, 220, 220},
      {250, 130, 10},  {130, 30, 200},  {120, 240, 60}, {255, 150, 190}, {0, 120, 110}, {140, 70, 20},
      {250, 250, 250}, {10, 10, 10},    {120, 0, 40},   {60, 150, 255},
  }};
  return kColors;
}

SceneStyle random_scene_style(std::uint64_t seed) {
  Rng rng(seed);
  SceneStyle style;
  style.texture_seed = derive_seed(seed, "texture");
  auto gray = [&](int lo, int hi) {
    const int base = lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    const int tint = static_cast<int>(rng.uniform_index(17)) - 8;
    return Rgb{clamp_channel(base + tint), clamp_channel(base), clamp_channel(base - tint)};
  };
  style.background_a = gray(70, 110);
  style.background_b = gray(140, 180);
  return style;
}

}  // namespace mmvm
