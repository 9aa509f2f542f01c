#include "qagen/video.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "render/prompt_render.hpp"

namespace mmvm::qagen {

double VideoAnnotation::frame_time(std::size_t k) const {
  const auto& f = frames.at(k);
  const double index = f.source_index ? static_cast<double>(*f.source_index) : static_cast<double>(k);
  return index / fps;
}

std::vector<std::size_t> sample_frame_indices(const VideoAnnotation& video, double interval_seconds) {
  if (!(interval_seconds > 0)) throw InvalidArgument("sampling interval must be > 0");
  if (!(video.fps > 0)) throw InvalidArgument("video fps must be > 0");
  std::vector<std::size_t> kept;
  if (video.frames.empty()) return kept;
  constexpr double kEps = 1e-9;
  const double last_time = video.frame_time(video.frames.size() - 1);
  std::size_t cursor = 0;
  for (std::int64_t j = 0;; ++j) {
    const double tick = static_cast<double>(j) * interval_seconds;
    if (tick > last_time + kEps) break;
    while (cursor + 1 < video.frames.size() && video.frame_time(cursor) < tick - kEps) ++cursor;
    if (kept.empty() || kept.back() != cursor) kept.push_back(cursor);
  }
  return kept;
}

std::vector<FramePair> sample_pairs(const VideoAnnotation& video, double interval_seconds) {
  const auto kept = sample_frame_indices(video, interval_seconds);
  std::vector<FramePair> pairs;
  for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
    const auto& a = video.frames[kept[i]];
    const auto& b = video.frames[kept[i + 1]];
    std::set<std::string> in_a;
    for (const auto& o : a.objects) in_a.insert(o.track_id);
    std::set<std::string> shared;
    for (const auto& o : b.objects) {
      if (in_a.contains(o.track_id)) shared.insert(o.track_id);
    }
    if (shared.empty()) continue;
    pairs.push_back({kept[i], kept[i + 1], {shared.begin(), shared.end()}});
  }
  return pairs;
}

std::string question_id(const VideoAnnotation& video, const FramePair& pair, const std::string& track_id) {
  return video.video_id + "/" + video.frames.at(pair.first).frame_id + "-" + video.frames.at(pair.second).frame_id +
         "/" + track_id;
}

std::vector<MatchingQuestion> build_questions(const VideoAnnotation& video, const FramePair& pair, std::uint64_t seed,
                                              const QuestionConfig& config) {
  const auto& first = video.frames.at(pair.first);
  const auto& second = video.frames.at(pair.second);
  if (pair.first >= pair.second) throw InvalidArgument("frame pair must be ordered in time");
  if (config.option_cap < 0) throw InvalidArgument("option cap must be >= 0");
  std::vector<MatchingQuestion> out;
  if (second.objects.size() < 2) return out;

  int cap = render::kMaxPaletteSize;
  if (config.option_cap > 0) cap = std::min(cap, config.option_cap);
  if (cap < 2) return out;

  for (const auto& track : pair.shared_tracks) {
    const auto query_it = std::find_if(first.objects.begin(), first.objects.end(),
                                       [&](const SegmentedObject& o) { return o.track_id == track; });
    const auto correct_it = std::find_if(second.objects.begin(), second.objects.end(),
                                         [&](const SegmentedObject& o) { return o.track_id == track; });
    if (query_it == first.objects.end() || correct_it == second.objects.end()) {
      throw InvalidArgument("shared track " + track + " missing from a frame");
    }
    const std::string qid = question_id(video, pair, track);
    Rng rng(derive_seed(seed, qid));

    std::vector<std::size_t> distractors;
    for (std::size_t i = 0; i < second.objects.size(); ++i) {
      if (second.objects[i].track_id != track) distractors.push_back(i);
    }
    rng.shuffle(std::span(distractors));
    if (distractors.size() > static_cast<std::size_t>(cap - 1)) distractors.resize(static_cast<std::size_t>(cap - 1));
    std::vector<std::size_t> candidates = distractors;
    candidates.push_back(static_cast<std::size_t>(correct_it - second.objects.begin()));
    rng.shuffle(std::span(candidates));

    const auto palette = render::default_palette(static_cast<int>(candidates.size()));
    MatchingQuestion q;
    q.id = qid;
    q.image_ids = {first.image.id, second.image.id};
    q.query.mode = ReferringMode::VisualPrompt;
    q.query.image_id = first.image.id;
    q.query.track_id = track;
    q.query.prompt = make_prompt_spec(1, palette[0], config.contour_thickness);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      AnswerOption opt;
      opt.label = option_label(k);
      opt.referral.mode = ReferringMode::VisualPrompt;
      opt.referral.image_id = second.image.id;
      opt.referral.track_id = second.objects[candidates[k]].track_id;
      opt.referral.prompt = make_prompt_spec(static_cast<int>(k) + 1, palette[k], config.contour_thickness);
      if (opt.referral.track_id == track) q.answer = opt.label;
      q.options.push_back(std::move(opt));
    }
    q.match_types = {MatchType::SftUntyped};
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace mmvm::qagen
