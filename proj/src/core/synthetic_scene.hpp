#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/raster.hpp"
#include "core/types.hpp"

namespace mmvm {

enum class ShapeKind : std::uint8_t { Circle, Rectangle, Triangle, Ellipse, Diamond };

std::string_view to_string(ShapeKind k) noexcept;

struct ShapeInstance {
  std::string track_id;
  ShapeKind kind = ShapeKind::Circle;
  double cx = 0;
  double cy = 0;
  double radius = 8;
  double aspect = 1.0;  // minor/major ratio for rectangles and ellipses
  double angle = 0.0;   // radians
  Rgb color{};
};

struct SceneStyle {
  std::uint64_t texture_seed = 0;
  Rgb background_a{96, 96, 96};
  Rgb background_b{160, 160, 160};
  int texture_amplitude = 10;
  int object_noise = 6;
};

struct RenderedScene {
  Image image;
  // Visible masks after occlusion (later shapes on top); fully hidden shapes
  // are omitted.
  std::vector<SegmentedObject> objects;
};

bool shape_contains(const ShapeInstance& s, double x, double y) noexcept;

RenderedScene render_scene(int width, int height, const SceneStyle& style, std::span<const ShapeInstance> shapes,
                           const std::string& frame_id);

// Well separated, saturated object colors for synthetic scenes.
std::span<const Rgb> synthetic_object_colors() noexcept;

// Random low-saturation background pair.
SceneStyle random_scene_style(std::uint64_t seed);

}  // namespace mmvm
