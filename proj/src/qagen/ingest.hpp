#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "core/raster.hpp"
#include "qagen/video.hpp"

namespace mmvm::qagen {

struct CocoVideoOptions {
  // Annotation files in this format carry no frame rate; frames are assumed
  // to be evenly spaced at this rate.
  double fps = 5.0;
};

// Reads a YouTube-VIS / OVIS style annotation file:
//   videos[]:      {id, width, height, file_names[]}
//   annotations[]: {id, video_id, category_id, segmentations[]} where each
//                  per-frame entry is null or an RLE {size:[h,w], counts}
//                  with counts either an integer list or the compact string
//   categories[]:  {id, name}
// Track ids are the annotation ids; image uris are the file names.
std::vector<VideoAnnotation> load_coco_videos(const std::filesystem::path& path, const CocoVideoOptions& options = {});
std::vector<VideoAnnotation> parse_coco_videos(const std::string& json_text, const CocoVideoOptions& options = {});

struct SyntheticVideoConfig {
  int min_size = 96;
  int max_size = 160;
  double fps = 5.0;
  int min_seconds = 3;
  int max_seconds = 6;
  int min_tracks = 2;
  int max_tracks = 6;
};

struct SyntheticVideoCorpus {
  std::vector<VideoAnnotation> videos;
  std::map<std::string, Image> frames;  // keyed by ImageRef::id

  Image load(const ImageRef& ref) const;
};

// Moving colored shapes on textured backgrounds. Tracks enter and leave so
// some frame pairs share no track and some frames hold a single object.
SyntheticVideoCorpus make_synthetic_videos(int count, std::uint64_t seed, const SyntheticVideoConfig& config = {});

}  // namespace mmvm::qagen
