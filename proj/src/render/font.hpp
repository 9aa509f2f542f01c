#pragma once

#include <string_view>

#include "core/mask.hpp"
#include "core/raster.hpp"

namespace mmvm::render {

// Fixed 5x7 bitmap font with one column of spacing between glyphs.
inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kGlyphAdvance = 6;

int text_width(std::string_view text, int scale = 1) noexcept;
int text_height(int scale = 1) noexcept;

// Draws `text` with its top-left at (x, y); pixels outside `clip` are skipped.
void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, int scale = 1);
void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, const BoundingBox& clip,
               int scale = 1);

}  // namespace mmvm::render
