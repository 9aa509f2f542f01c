#include "core/manifest.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/json_util.hpp"
#include "json.hpp"

namespace mmvm {

using nlohmann::json;

const ImageEntry* DatasetManifest::find_image(std::string_view id) const noexcept {
  for (const auto& img : images) {
    if (img.ref.id == id) return &img;
  }
  return nullptr;
}

const SegmentedObject* DatasetManifest::find_object(std::string_view image_id,
                                                    std::string_view track_id) const noexcept {
  const auto* img = find_image(image_id);
  if (!img) return nullptr;
  for (const auto& obj : img->objects) {
    if (obj.track_id == track_id) return &obj;
  }
  return nullptr;
}

// ---------------------------------------------------------------- encoding

namespace {

json object_to_json(const SegmentedObject& obj) {
  const Rle rle = encode_rle(obj.mask);
  json j = {{"track_id", obj.track_id},
            {"frame_id", obj.frame_id},
            {"mask", {{"size", {rle.height, rle.width}}, {"counts", rle.counts}}}};
  if (obj.category) j["category"] = *obj.category;
  return j;
}

SegmentedObject object_from_json(const json& j) {
  json_util::expect_keys(j, {"track_id", "frame_id", "mask"}, {"category"}, "object");
  SegmentedObject obj;
  obj.track_id = json_util::get_string(j, "track_id");
  obj.frame_id = json_util::get_string(j, "frame_id");
  if (j.contains("category")) obj.category = json_util::get_string(j, "category");
  const json& m = j.at("mask");
  json_util::expect_keys(m, {"size", "counts"}, {}, "mask");
  const json& size = m.at("size");
  if (!size.is_array() || size.size() != 2) throw ParseError("mask.size must be [height, width]");
  Rle rle;
  rle.height = json_util::as_int(size[0], "mask.size[0]");
  rle.width = json_util::as_int(size[1], "mask.size[1]");
  if (!m.at("counts").is_array()) throw ParseError("mask.counts must be an array");
  for (const auto& c : m.at("counts")) {
    if (!c.is_number_unsigned()) throw ParseError("mask.counts entries must be unsigned integers");
    rle.counts.push_back(c.get<std::uint32_t>());
  }
  obj.mask = decode_rle(rle);
  return obj;
}

json rgb_to_json(Rgb c) { return json::array({c.r, c.g, c.b}); }

Rgb rgb_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + " must be [r, g, b]");
  Rgb c;
  std::uint8_t* ch[3] = {&c.r, &c.g, &c.b};
  for (int i = 0; i < 3; ++i) {
    const int v = json_util::as_int(j[i], what);
    if (v < 0 || v > 255) throw ParseError(std::string(what) + " channel out of range");
    *ch[i] = static_cast<std::uint8_t>(v);
  }
  return c;
}

json prompt_to_json(const VisualPromptSpec& p) {
  return {{"tag", p.object_tag},
          {"contour_color", rgb_to_json(p.contour_color)},
          {"thickness", p.contour_thickness},
          {"tag_text_color", rgb_to_json(p.tag_text_color)},
          {"tag_background_color", rgb_to_json(p.tag_background_color)}};
}

VisualPromptSpec prompt_from_json(const json& j) {
  json_util::expect_keys(j, {"tag", "contour_color", "thickness", "tag_text_color", "tag_background_color"}, {},
                         "prompt");
  VisualPromptSpec p;
  p.object_tag = json_util::as_int(j.at("tag"), "prompt.tag");
  p.contour_color = rgb_from_json(j.at("contour_color"), "prompt.contour_color");
  p.contour_thickness = json_util::as_int(j.at("thickness"), "prompt.thickness");
  p.tag_text_color = rgb_from_json(j.at("tag_text_color"), "prompt.tag_text_color");
  p.tag_background_color = rgb_from_json(j.at("tag_background_color"), "prompt.tag_background_color");
  return p;
}

json referral_to_json(const ObjectReferral& r) {
  json j = {{"mode", std::string(to_string(r.mode))}};
  if (r.mode == ReferringMode::VisualPrompt) {
    j["image_id"] = r.image_id;
    j["track_id"] = r.track_id;
    if (r.prompt) j["prompt"] = prompt_to_json(*r.prompt);
  } else {
    j["text"] = r.text;
  }
  return j;
}

ObjectReferral referral_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("referral must be an object");
  ObjectReferral r;
  const auto mode = parse_referring_mode(json_util::get_string(j, "mode"));
  if (!mode) throw ParseError("unknown referring mode");
  r.mode = *mode;
  if (r.mode == ReferringMode::VisualPrompt) {
    json_util::expect_keys(j, {"mode", "image_id", "track_id"}, {"prompt"}, "referral");
    r.image_id = json_util::get_string(j, "image_id");
    r.track_id = json_util::get_string(j, "track_id");
    if (j.contains("prompt")) r.prompt = prompt_from_json(j.at("prompt"));
  } else {
    json_util::expect_keys(j, {"mode", "text"}, {}, "referral");
    r.text = json_util::get_string(j, "text");
  }
  return r;
}

json question_to_json(const MatchingQuestion& q) {
  json options = json::array();
  for (const auto& o : q.options) options.push_back({{"label", o.label}, {"ref", referral_to_json(o.referral)}});
  json types = json::array();
  for (auto t : q.match_types) types.push_back(std::string(to_string(t)));
  json j = {{"kind", "question"},     {"id", q.id},          {"image_ids", q.image_ids},
            {"query", referral_to_json(q.query)}, {"options", options}, {"answer", q.answer},
            {"match_types", types}};
  if (q.question_text) j["text"] = *q.question_text;
  if (q.reason) j["reason"] = *q.reason;
  return j;
}

MatchingQuestion question_from_json(const json& j) {
  json_util::expect_keys(j, {"kind", "id", "image_ids", "query", "options", "answer", "match_types"},
                         {"text", "reason"}, "question");
  MatchingQuestion q;
  q.id = json_util::get_string(j, "id");
  if (!j.at("image_ids").is_array()) throw ParseError("image_ids must be an array");
  for (const auto& id : j.at("image_ids")) q.image_ids.push_back(json_util::as_string(id, "image_ids[]"));
  if (j.contains("text")) q.question_text = json_util::get_string(j, "text");
  q.query = referral_from_json(j.at("query"));
  if (!j.at("options").is_array()) throw ParseError("options must be an array");
  for (const auto& o : j.at("options")) {
    json_util::expect_keys(o, {"label", "ref"}, {}, "option");
    q.options.push_back({json_util::get_string(o, "label"), referral_from_json(o.at("ref"))});
  }
  q.answer = json_util::get_string(j, "answer");
  if (!j.at("match_types").is_array()) throw ParseError("match_types must be an array");
  for (const auto& t : j.at("match_types")) {
    const auto mt = parse_match_type(json_util::as_string(t, "match_types[]"));
    if (!mt) throw ParseError("unknown match type " + t.dump());
    q.match_types.push_back(*mt);
  }
  std::sort(q.match_types.begin(), q.match_types.end());
  q.match_types.erase(std::unique(q.match_types.begin(), q.match_types.end()), q.match_types.end());
  if (j.contains("reason")) q.reason = json_util::get_string(j, "reason");
  return q;
}

}  // namespace

std::string serialize_manifest(const DatasetManifest& m) {
  std::string out;
  json header = {{"kind", "header"},
                 {"format", std::string(kManifestFormat)},
                 {"version", m.version},
                 {"provenance",
                  {{"generator", m.provenance.generator},
                   {"seed", m.provenance.seed},
                   {"config_hash", m.provenance.config_hash}}},
                 {"image_count", m.images.size()},
                 {"question_count", m.questions.size()}};
  out += header.dump();
  out += '\n';
  for (const auto& img : m.images) {
    json objects = json::array();
    for (const auto& obj : img.objects) objects.push_back(object_to_json(obj));
    json j = {{"kind", "image"},
              {"id", img.ref.id},
              {"width", img.ref.width},
              {"height", img.ref.height},
              {"uri", img.ref.uri},
              {"objects", objects}};
    out += j.dump();
    out += '\n';
  }
  for (const auto& q : m.questions) {
    json j = question_to_json(q);
    // match_types are emitted in enum order regardless of construction order.
    std::vector<MatchType> types = q.match_types;
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());
    j["match_types"] = json::array();
    for (auto t : types) j["match_types"].push_back(std::string(to_string(t)));
    out += j.dump();
    out += '\n';
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view bytes) {
  DatasetManifest m;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  std::size_t expected_images = 0;
  std::size_t expected_questions = 0;
  while (pos < bytes.size()) {
    const std::size_t nl = bytes.find('\n', pos);
    const std::string_view line = bytes.substr(pos, nl == std::string_view::npos ? bytes.size() - pos : nl - pos);
    pos = (nl == std::string_view::npos) ? bytes.size() : nl + 1;
    ++line_no;
    if (line.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty record");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!j.is_object()) throw ParseError("record must be a JSON object");
      const std::string kind = json_util::get_string(j, "kind");
      if (!have_header) {
        if (kind != "header") throw ParseError("first record must be the header");
        json_util::expect_keys(j, {"kind", "format", "version", "provenance", "image_count", "question_count"}, {},
                               "header");
        if (json_util::get_string(j, "format") != kManifestFormat) throw ParseError("unknown manifest format");
        m.version = json_util::get_string(j, "version");
        if (m.version != kManifestVersion) throw ParseError("unsupported manifest version " + m.version);
        const json& p = j.at("provenance");
        json_util::expect_keys(p, {"generator", "seed", "config_hash"}, {}, "provenance");
        m.provenance.generator = json_util::get_string(p, "generator");
        if (!p.at("seed").is_number_unsigned()) throw ParseError("provenance.seed must be unsigned");
        m.provenance.seed = p.at("seed").get<std::uint64_t>();
        m.provenance.config_hash = json_util::get_string(p, "config_hash");
        expected_images = static_cast<std::size_t>(json_util::as_int(j.at("image_count"), "image_count"));
        expected_questions = static_cast<std::size_t>(json_util::as_int(j.at("question_count"), "question_count"));
        have_header = true;
      } else if (kind == "image") {
        if (!m.questions.empty()) throw ParseError("image records must precede question records");
        json_util::expect_keys(j, {"kind", "id", "width", "height", "uri", "objects"}, {}, "image");
        ImageEntry img;
        img.ref.id = json_util::get_string(j, "id");
        img.ref.width = json_util::as_int(j.at("width"), "width");
        img.ref.height = json_util::as_int(j.at("height"), "height");
        img.ref.uri = json_util::get_string(j, "uri");
        if (!j.at("objects").is_array()) throw ParseError("objects must be an array");
        for (const auto& o : j.at("objects")) img.objects.push_back(object_from_json(o));
        m.images.push_back(std::move(img));
      } else if (kind == "question") {
        m.questions.push_back(question_from_json(j));
      } else {
        throw ParseError("unknown record kind '" + kind + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError("missing header record");
  if (m.images.size() != expected_images || m.questions.size() != expected_questions) {
    throw ParseError("record counts do not match header");
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return parse_manifest(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  write_file(path, serialize_manifest(manifest));
}

std::string manifest_hash(const DatasetManifest& manifest) { return sha256_hex(serialize_manifest(manifest)); }

// -------------------------------------------------------------- validation

namespace {

class ViolationSink {
 public:
  void add(std::string entity, std::string rule, std::string detail) {
    out_.push_back({std::move(entity), std::move(rule), std::move(detail)});
  }
  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

void check_prompt(const VisualPromptSpec& p, const std::string& entity, ViolationSink& sink) {
  if (p.object_tag < 1) sink.add(entity, "prompt.tag_not_positive", "tag " + std::to_string(p.object_tag));
  if (p.contour_thickness < 1) sink.add(entity, "prompt.thickness", "thickness must be >= 1");
  if (p.tag_background_color != p.contour_color) {
    sink.add(entity, "prompt.tag_background", "tag background must equal contour color");
  }
}

void check_referral(const DatasetManifest& m, const MatchingQuestion& q, const ObjectReferral& r,
                    const std::string& entity, ViolationSink& sink) {
  if (r.mode == ReferringMode::TextPrompt) {
    if (r.text.find_first_not_of(" \t\r\n") == std::string::npos) {
      sink.add(entity, "referral.empty_text", "text_prompt referral needs a description");
    }
    return;
  }
  if (!r.prompt) sink.add(entity, "referral.missing_prompt", "visual_prompt referral needs a prompt spec");
  else check_prompt(*r.prompt, entity, sink);
  if (std::find(q.image_ids.begin(), q.image_ids.end(), r.image_id) == q.image_ids.end()) {
    sink.add(entity, "referral.image_not_in_question", "image '" + r.image_id + "' is not one of the question images");
  }
  if (m.find_image(r.image_id) && !m.find_object(r.image_id, r.track_id)) {
    sink.add(entity, "referral.dangling_object", "no object '" + r.track_id + "' in image '" + r.image_id + "'");
  }
}

}  // namespace

std::vector<Violation> validate_manifest(const DatasetManifest& m, const ValidationOptions& options) {
  ViolationSink sink;

  std::set<std::string> image_ids;
  for (const auto& img : m.images) {
    const std::string entity = "image " + img.ref.id;
    if (!image_ids.insert(img.ref.id).second) sink.add(entity, "image.duplicate_id", "image id is not unique");
    if (img.ref.width < 1 || img.ref.height < 1) {
      sink.add(entity, "image.dimensions", "width and height must be >= 1");
    }
    if (options.image_root) {
      const auto path = *options.image_root / img.ref.uri;
      if (!std::filesystem::exists(path)) {
        sink.add(entity, "image.raster_missing", path.string());
      } else {
        try {
          const auto [w, h] = png_dimensions(path);
          if (w != img.ref.width || h != img.ref.height) {
            sink.add(entity, "image.raster_mismatch",
                     "raster is " + std::to_string(w) + "x" + std::to_string(h));
          }
        } catch (const std::exception& e) {
          sink.add(entity, "image.raster_unreadable", e.what());
        }
      }
    }
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& obj : img.objects) {
      const std::string oentity = entity + " object " + obj.track_id;
      if (obj.mask.width() != img.ref.width || obj.mask.height() != img.ref.height) {
        sink.add(oentity, "object.mask_dimensions", "mask size differs from image size");
      }
      if (obj.mask.empty()) sink.add(oentity, "object.empty_mask", "mask has no set cell");
      if (!keys.emplace(obj.track_id, obj.frame_id).second) {
        sink.add(oentity, "object.duplicate_track", "(track_id, frame_id) is not unique");
      }
    }
  }

  std::set<std::string> question_ids;
  for (const auto& q : m.questions) {
    const std::string entity = "question " + q.id;
    if (!question_ids.insert(q.id).second) sink.add(entity, "question.duplicate_id", "question id is not unique");
    if (q.image_ids.size() < 2) sink.add(entity, "question.too_few_images", "need at least 2 images");
    for (const auto& id : q.image_ids) {
      if (!image_ids.contains(id)) sink.add(entity, "question.dangling_image", "unknown image id '" + id + "'");
    }
    if (q.options.size() < 2) sink.add(entity, "question.too_few_options", "need at least 2 options");
    bool labels_ok = true;
    for (std::size_t i = 0; i < q.options.size(); ++i) {
      if (q.options[i].label != option_label(i)) labels_ok = false;
    }
    if (!labels_ok) sink.add(entity, "question.labels_not_consecutive", "labels must be A, B, C, ... in order");
    const auto answer_it = std::find_if(q.options.begin(), q.options.end(),
                                        [&](const AnswerOption& o) { return o.label == q.answer; });
    if (answer_it == q.options.end()) {
      sink.add(entity, "question.answer_not_in_options", "answer '" + q.answer + "' is not an option label");
    }
    if (q.match_types.empty()) sink.add(entity, "question.no_match_types", "match_types must be non-empty");

    check_referral(m, q, q.query, entity + " query", sink);
    for (const auto& o : q.options) check_referral(m, q, o.referral, entity + " option " + o.label, sink);

    // Prompt tags and colors must be distinct within each rendered image.
    std::map<std::string, std::vector<const VisualPromptSpec*>> per_image;
    auto collect = [&](const ObjectReferral& r) {
      if (r.mode == ReferringMode::VisualPrompt && r.prompt) per_image[r.image_id].push_back(&*r.prompt);
    };
    collect(q.query);
    for (const auto& o : q.options) collect(o.referral);
    for (const auto& [image_id, specs] : per_image) {
      std::set<int> tags;
      std::set<Rgb> colors;
      for (const auto* p : specs) {
        if (!tags.insert(p->object_tag).second) {
          sink.add(entity, "question.duplicate_tag", "tag " + std::to_string(p->object_tag) + " repeats in " + image_id);
        }
        if (!colors.insert(p->contour_color).second) {
          sink.add(entity, "question.duplicate_color", "contour color repeats in " + image_id);
        }
      }
    }

    // With visual referrals on both sides the correct option is checkable.
    const bool all_visual =
        q.query.mode == ReferringMode::VisualPrompt &&
        std::all_of(q.options.begin(), q.options.end(),
                    [](const AnswerOption& o) { return o.referral.mode == ReferringMode::VisualPrompt; });
    if (all_visual && answer_it != q.options.end()) {
      const auto matches = std::count_if(q.options.begin(), q.options.end(), [&](const AnswerOption& o) {
        return o.referral.track_id == q.query.track_id;
      });
      if (matches != 1 || answer_it->referral.track_id != q.query.track_id) {
        sink.add(entity, "question.correct_option",
                 "exactly one option must share the query track, and it must be the answer");
      }
    }
  }
  return sink.take();
}

}  // namespace mmvm
