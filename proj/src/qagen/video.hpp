#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace mmvm::qagen {

struct VideoFrame {
  std::string frame_id;
  ImageRef image;
  std::vector<SegmentedObject> objects;
  // Position in the source video; defaults to the position in `frames`.
  std::optional<std::int64_t> source_index;
};

struct VideoAnnotation {
  std::string video_id;
  double fps = 1.0;
  std::vector<VideoFrame> frames;

  double frame_time(std::size_t k) const;
};

struct FramePair {
  std::size_t first = 0;   // index into VideoAnnotation::frames
  std::size_t second = 0;
  std::vector<std::string> shared_tracks;  // sorted
  friend bool operator==(const FramePair&, const FramePair&) = default;
};

// Indices of frames kept by fixed-interval sampling: for each tick
// t = j*interval up to the last frame's time, the first frame at or after t
// (the last frame when none). Consecutive duplicates collapse.
std::vector<std::size_t> sample_frame_indices(const VideoAnnotation& video, double interval_seconds = 1.0);

// Pairs consecutive kept frames that share at least one track.
std::vector<FramePair> sample_pairs(const VideoAnnotation& video, double interval_seconds = 1.0);

struct QuestionConfig {
  int option_cap = 0;  // 0 = every second-frame object becomes an option
  int contour_thickness = kDefaultContourThickness;
};

// One question per shared track: the query is the track's object in the first
// frame; options are the second-frame objects in a seeded order, which also
// fixes their rendered numeric tags (tag k <-> k-th letter).
std::vector<MatchingQuestion> build_questions(const VideoAnnotation& video, const FramePair& pair,
                                              std::uint64_t seed, const QuestionConfig& config = {});

std::string question_id(const VideoAnnotation& video, const FramePair& pair, const std::string& track_id);

}  // namespace mmvm::qagen
