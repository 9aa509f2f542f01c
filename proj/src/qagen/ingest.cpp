#include "qagen/ingest.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/json_util.hpp"
#include "core/rng.hpp"
#include "core/synthetic_scene.hpp"
#include "json.hpp"

namespace mmvm::qagen {

using nlohmann::json;

namespace {

std::string id_string(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  throw ParseError("id must be a string or integer");
}

Mask mask_from_coco_rle(const json& seg, int height, int width) {
  if (!seg.is_object() || !seg.contains("counts") || !seg.contains("size")) {
    throw ParseError("segmentation must be an RLE object (polygons are not supported)");
  }
  const json& size = seg.at("size");
  if (!size.is_array() || size.size() != 2 || size[0].get<int>() != height || size[1].get<int>() != width) {
    throw ParseError("segmentation size does not match video size");
  }
  std::vector<std::uint32_t> counts;
  if (seg.at("counts").is_string()) {
    counts = decode_coco_counts_string(seg.at("counts").get<std::string>());
  } else {
    for (const auto& c : seg.at("counts")) counts.push_back(c.get<std::uint32_t>());
  }
  return decode_column_major_rle(counts, height, width);
}

}  // namespace

std::vector<VideoAnnotation> parse_coco_videos(const std::string& json_text, const CocoVideoOptions& options) {
  if (!(options.fps > 0)) throw InvalidArgument("fps must be > 0");
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("annotation file is not JSON: ") + e.what());
  }
  try {
    std::map<std::string, std::string> categories;
    if (root.contains("categories")) {
      for (const auto& c : root.at("categories")) categories[id_string(c.at("id"))] = c.at("name").get<std::string>();
    }
    std::vector<VideoAnnotation> videos;
    std::map<std::string, std::size_t> by_id;
    for (const auto& v : root.at("videos")) {
      VideoAnnotation video;
      video.video_id = id_string(v.at("id"));
      video.fps = options.fps;
      const int width = v.at("width").get<int>();
      const int height = v.at("height").get<int>();
      const auto& names = v.at("file_names");
      for (std::size_t k = 0; k < names.size(); ++k) {
        VideoFrame frame;
        frame.frame_id = std::to_string(k);
        frame.image = {video.video_id + "/" + std::to_string(k), width, height, names[k].get<std::string>()};
        frame.source_index = static_cast<std::int64_t>(k);
        video.frames.push_back(std::move(frame));
      }
      by_id[video.video_id] = videos.size();
      videos.push_back(std::move(video));
    }
    for (const auto& a : root.at("annotations")) {
      const std::string vid = id_string(a.at("video_id"));
      const auto it = by_id.find(vid);
      if (it == by_id.end()) throw ParseError("annotation references unknown video " + vid);
      VideoAnnotation& video = videos[it->second];
      const std::string track = id_string(a.at("id"));
      std::optional<std::string> category;
      if (a.contains("category_id") && !a.at("category_id").is_null()) {
        const auto c = categories.find(id_string(a.at("category_id")));
        if (c != categories.end()) category = c->second;
      }
      const auto& segs = a.at("segmentations");
      if (segs.size() != video.frames.size()) throw ParseError("segmentations length differs from frame count");
      for (std::size_t k = 0; k < segs.size(); ++k) {
        if (segs[k].is_null()) continue;
        auto& frame = video.frames[k];
        Mask mask = mask_from_coco_rle(segs[k], frame.image.height, frame.image.width);
        if (mask.empty()) continue;
        frame.objects.push_back({track, frame.frame_id, std::move(mask), category});
      }
    }
    for (auto& video : videos) {
      for (auto& frame : video.frames) {
        std::sort(frame.objects.begin(), frame.objects.end(),
                  [](const SegmentedObject& a, const SegmentedObject& b) { return a.track_id < b.track_id; });
      }
    }
    return videos;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed annotation file: ") + e.what());
  }
}

std::vector<VideoAnnotation> load_coco_videos(const std::filesystem::path& path, const CocoVideoOptions& options) {
  return parse_coco_videos(read_file(path), options);
}

Image SyntheticVideoCorpus::load(const ImageRef& ref) const {
  const auto it = frames.find(ref.id);
  if (it == frames.end()) throw InvalidArgument("no synthetic frame " + ref.id);
  return it->second;
}

SyntheticVideoCorpus make_synthetic_videos(int count, std::uint64_t seed, const SyntheticVideoConfig& config) {
  if (count < 0) throw InvalidArgument("video count must be >= 0");
  SyntheticVideoCorpus corpus;
  const auto colors = synthetic_object_colors();
  for (int v = 0; v < count; ++v) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(v)));
    VideoAnnotation video;
    char name[16];
    std::snprintf(name, sizeof name, "vid%03d", v);
    video.video_id = name;
    video.fps = config.fps;
    const int width = config.min_size + static_cast<int>(rng.uniform_index(config.max_size - config.min_size + 1));
    const int height = config.min_size + static_cast<int>(rng.uniform_index(config.max_size - config.min_size + 1));
    const int seconds = config.min_seconds + static_cast<int>(rng.uniform_index(config.max_seconds - config.min_seconds + 1));
    const int n_frames = static_cast<int>(std::lround(seconds * config.fps));
    const int n_tracks = config.min_tracks + static_cast<int>(rng.uniform_index(config.max_tracks - config.min_tracks + 1));

    struct Track {
      ShapeInstance shape;
      double vx, vy;
      int start, end;  // frame range [start, end)
    };
    std::vector<std::size_t> color_order(colors.size());
    for (std::size_t i = 0; i < color_order.size(); ++i) color_order[i] = i;
    rng.shuffle(std::span(color_order));
    std::vector<Track> tracks;
    for (int t = 0; t < n_tracks; ++t) {
      Track tr;
      tr.shape.track_id = "t" + std::to_string(t);
      tr.shape.kind = static_cast<ShapeKind>(rng.uniform_index(5));
      tr.shape.radius = rng.uniform(0.08, 0.16) * std::min(width, height);
      tr.shape.aspect = rng.uniform(0.5, 1.0);
      tr.shape.angle = rng.uniform(0.0, 3.14159);
      tr.shape.cx = rng.uniform(tr.shape.radius, width - tr.shape.radius);
      tr.shape.cy = rng.uniform(tr.shape.radius, height - tr.shape.radius);
      tr.shape.color = colors[color_order[static_cast<std::size_t>(t) % colors.size()]];
      tr.vx = rng.uniform(-6.0, 6.0);
      tr.vy = rng.uniform(-6.0, 6.0);
      // Most tracks span the whole clip; some enter late or leave early.
      tr.start = 0;
      tr.end = n_frames;
      const double r = rng.uniform01();
      if (r < 0.2) tr.start = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_frames)));
      else if (r < 0.4) tr.end = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_frames)));
      tracks.push_back(tr);
    }
    const SceneStyle style = random_scene_style(derive_seed(seed, "style/" + video.video_id));
    for (int f = 0; f < n_frames; ++f) {
      std::vector<ShapeInstance> visible;
      for (const auto& tr : tracks) {
        if (f < tr.start || f >= tr.end) continue;
        ShapeInstance s = tr.shape;
        // Bounce inside the frame.
        auto bounce = [](double p0, double v, int f, double lo, double hi) {
          const double span = hi - lo;
          if (span <= 0) return lo;
          double p = std::fmod(p0 - lo + v * f, 2 * span);
          if (p < 0) p += 2 * span;
          return lo + (p <= span ? p : 2 * span - p);
        };
        s.cx = bounce(tr.shape.cx, tr.vx, f, s.radius, width - s.radius);
        s.cy = bounce(tr.shape.cy, tr.vy, f, s.radius, height - s.radius);
        visible.push_back(s);
      }
      VideoFrame frame;
      char fid[16];
      std::snprintf(fid, sizeof fid, "f%04d", f);
      frame.frame_id = fid;
      frame.source_index = f;
      frame.image = {video.video_id + "/" + frame.frame_id, width, height,
                     "images/" + video.video_id + "/" + frame.frame_id + ".png"};
      SceneStyle fs = style;
      fs.texture_seed = derive_seed(style.texture_seed, static_cast<std::uint64_t>(f));
      RenderedScene scene = render_scene(width, height, fs, visible, frame.frame_id);
      frame.objects = std::move(scene.objects);
      corpus.frames.emplace(frame.image.id, std::move(scene.image));
      video.frames.push_back(std::move(frame));
    }
    corpus.videos.push_back(std::move(video));
  }
  return corpus;
}

}  // namespace mmvm::qagen
