#pragma once

#include <functional>
#include <span>
#include <vector>

#include "core/manifest.hpp"
#include "core/mask.hpp"
#include "core/raster.hpp"
#include "core/resample.hpp"
#include "core/types.hpp"

namespace mmvm::render {

// Masks whose bounding box is narrower or shorter than this get their tag
// placed beside the object instead of over it.
inline constexpr int kSmallObjectSide = 12;
inline constexpr int kTagPadding = 1;
inline constexpr int kMaxPaletteSize = 64;

struct PromptedObject {
  std::reference_wrapper<const Mask> mask;
  VisualPromptSpec spec;
};

// Mask cells with at least one 4-neighbour outside the mask (image exterior
// counts as outside).
Mask boundary(const Mask& mask);
// Boundary dilated to cells within Chebyshev distance thickness-1.
Mask contour_band(const Mask& mask, int thickness);
// Top-most, then left-most boundary cell. Throws InvalidArgument on an empty mask.
std::pair<int, int> tag_anchor(const Mask& mask);
// Tag rectangle for `tag` on `mask`, clipped to the image.
BoundingBox tag_box(const Mask& mask, int tag);

// Burns contour bands and numbered tags into a copy of `image`. Bands are
// drawn first in list order, then all tags.
Image render_prompts(const Image& image, std::span<const PromptedObject> objects);

Image concat_vertical(std::span<const Image> images);

std::vector<Rgb> default_palette(int n);

struct QuestionRenderOptions {
  // 0 disables; otherwise long edge scaled to this and short edge padded.
  int resize_long_edge = 0;
};

// One edited raster per question image, with every visual referral that
// targets that image drawn on it.
std::vector<Image> render_question(const DatasetManifest& manifest, const MatchingQuestion& question,
                                   const RasterLoader& loader, const QuestionRenderOptions& options = {});

// File name used for the k-th edited image of a question.
std::string edited_image_name(std::string_view question_id, std::size_t k);

}  // namespace mmvm::render
