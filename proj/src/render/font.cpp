#include "render/font.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>

namespace mmvm::render {
namespace {

using Glyph = std::array<std::uint8_t, kGlyphHeight>;

constexpr std::array<Glyph, 10> kDigits = {{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
}};

constexpr std::array<Glyph, 26> kLetters = {{
    {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
    {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
    {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
    {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
    {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
    {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
    {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
    {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
    {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
}};

constexpr Glyph kBlank = {0, 0, 0, 0, 0, 0, 0};
constexpr Glyph kUnknown = {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04};

const Glyph& glyph_for(char c) {
  static constexpr Glyph kDot = {0, 0, 0, 0, 0, 0x0C, 0x0C};
  static constexpr Glyph kDash = {0, 0, 0, 0x1F, 0, 0, 0};
  static constexpr Glyph kUnderscore = {0, 0, 0, 0, 0, 0, 0x1F};
  static constexpr Glyph kColon = {0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0};
  static constexpr Glyph kSlash = {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10};
  static constexpr Glyph kPercent = {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03};
  static constexpr Glyph kLParen = {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02};
  static constexpr Glyph kRParen = {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08};
  static constexpr Glyph kPlus = {0, 0x04, 0x04, 0x1F, 0x04, 0x04, 0};
  if (c >= '0' && c <= '9') return kDigits[c - '0'];
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u >= 'A' && u <= 'Z') return kLetters[u - 'A'];
  switch (c) {
    case ' ': return kBlank;
    case '.': return kDot;
    case '-': return kDash;
    case '_': return kUnderscore;
    case ':': return kColon;
    case '/': return kSlash;
    case '%': return kPercent;
    case '(': return kLParen;
    case ')': return kRParen;
    case '+': return kPlus;
    default: return kUnknown;
  }
}

}  // namespace

int text_width(std::string_view text, int scale) noexcept {
  if (text.empty()) return 0;
  return (static_cast<int>(text.size()) * kGlyphAdvance - 1) * scale;
}

int text_height(int scale) noexcept { return kGlyphHeight * scale; }

void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, int scale) {
  draw_text(image, x, y, text, color, BoundingBox{0, 0, image.width(), image.height()}, scale);
}

void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, const BoundingBox& clip, int scale) {
  const BoundingBox box{std::max(clip.x0, 0), std::max(clip.y0, 0), std::min(clip.x1, image.width()),
                        std::min(clip.y1, image.height())};
  for (std::size_t i = 0; i < text.size(); ++i) {
    const Glyph& g = glyph_for(text[i]);
    const int gx = x + static_cast<int>(i) * kGlyphAdvance * scale;
    for (int row = 0; row < kGlyphHeight; ++row) {
      for (int col = 0; col < kGlyphWidth; ++col) {
        if (!((g[row] >> (kGlyphWidth - 1 - col)) & 1)) continue;
        for (int sy = 0; sy < scale; ++sy) {
          for (int sx = 0; sx < scale; ++sx) {
            const int px = gx + col * scale + sx;
            const int py = y + row * scale + sy;
            if (px >= box.x0 && px < box.x1 && py >= box.y0 && py < box.y1) image.set(px, py, color);
          }
        }
      }
    }
  }
}

}  // namespace mmvm::render
