#include "qagen/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>
#include <thread>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "json.hpp"
#include "qagen/prompt_assets.hpp"
#include "render/prompt_render.hpp"

namespace mmvm::qagen {

using nlohmann::json;

std::string_view to_string(AnnotationStatus s) noexcept {
  switch (s) {
    case AnnotationStatus::Ok: return "ok";
    case AnnotationStatus::TransportFailed: return "transport_failed";
    case AnnotationStatus::ReasonInvalid: return "reason_invalid";
  }
  return "unknown";
}

namespace {

std::string replace_all(std::string text, std::string_view token, std::string_view value) {
  for (std::size_t pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size())) {
    text.replace(pos, token.size(), value);
  }
  return text;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 0;
    if (len == 0 || i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    }
    i += len;
  }
  return true;
}

struct CallFailure {
  AnnotationStatus status;
  int attempts;
  std::string error;
};

template <typename Call>
std::string call_with_retry(Call&& call, const AnnotationConfig& config, int& attempts) {
  for (attempts = 1;; ++attempts) {
    try {
      return call();
    } catch (const TransportError& e) {
      if (attempts >= config.max_attempts) throw CallFailure{AnnotationStatus::TransportFailed, attempts, e.what()};
      if (config.backoff_base_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config.backoff_base_ms << (attempts - 1)));
      }
    } catch (const ParseError& e) {
      throw CallFailure{AnnotationStatus::ReasonInvalid, attempts, e.what()};
    }
  }
}

const ImageEntry& require_image(const DatasetManifest& m, const std::string& id) {
  const ImageEntry* e = m.find_image(id);
  if (!e) throw InvalidArgument("unknown image " + id);
  return *e;
}

const SegmentedObject& require_object(const DatasetManifest& m, const ObjectReferral& r) {
  const SegmentedObject* o = m.find_object(r.image_id, r.track_id);
  if (!o) throw InvalidArgument("unknown object " + r.track_id + " in " + r.image_id);
  return *o;
}

}  // namespace

std::string render_describe_prompt(int tag) {
  return replace_all(std::string(assets::kDescribeTemplate), "{tag}", std::to_string(tag));
}

std::string render_justify_prompt(int query_tag, const std::string& query_info,
                                  const std::vector<std::pair<int, std::string>>& candidate_infos, int answer_tag) {
  std::string candidates;
  for (const auto& [tag, info] : candidate_infos) {
    if (!candidates.empty()) candidates += '\n';
    candidates += "ID " + std::to_string(tag) + ": " + info;
  }
  std::string text(assets::kJustifyTemplate);
  text = replace_all(std::move(text), "{query_tag}", std::to_string(query_tag));
  text = replace_all(std::move(text), "{query_info}", query_info);
  text = replace_all(std::move(text), "{candidate_infos}", candidates);
  return replace_all(std::move(text), "{answer_tag}", std::to_string(answer_tag));
}

AnnotationResult annotate_reasons(const std::vector<MatchingQuestion>& questions, const DatasetManifest& context,
                                  const RasterLoader& loader, AnnotatorClient& client,
                                  const AnnotationConfig& config) {
  if (config.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
  AnnotationResult result;
  result.questions = questions;
  result.outcomes.resize(questions.size());

  parallel_for(questions.size(), config.concurrency, [&](std::size_t i) {
    MatchingQuestion& q = result.questions[i];
    AnnotationOutcome& outcome = result.outcomes[i];
    outcome.question_id = q.id;
    q.reason.reset();
    try {
      if (q.query.mode != ReferringMode::VisualPrompt || !q.query.prompt) {
        throw InvalidArgument("reason annotation needs a visual-prompt query");
      }
      auto describe = [&](const ObjectReferral& r) {
        const ImageEntry& img = require_image(context, r.image_id);
        const render::PromptedObject one{std::cref(require_object(context, r).mask), *r.prompt};
        DescribeRequest req{r.image_id + "#" + r.track_id,
                            render::render_prompts(loader(img.ref), std::span(&one, 1)),
                            render_describe_prompt(r.prompt->object_tag)};
        int attempts = 0;
        std::string text = trim(call_with_retry([&] { return client.describe(req); }, config, attempts));
        if (text.empty()) throw CallFailure{AnnotationStatus::ReasonInvalid, attempts, "empty description"};
        return text;
      };
      const std::string query_info = describe(q.query);
      std::vector<std::pair<int, std::string>> infos;
      int answer_tag = 0;
      for (const auto& o : q.options) {
        if (o.referral.mode != ReferringMode::VisualPrompt || !o.referral.prompt) {
          throw InvalidArgument("reason annotation needs visual-prompt options");
        }
        infos.emplace_back(o.referral.prompt->object_tag, describe(o.referral));
        if (o.label == q.answer) answer_tag = o.referral.prompt->object_tag;
      }
      JustifyRequest req{q.id, render::render_question(context, q, loader),
                         render_justify_prompt(q.query.prompt->object_tag, query_info, infos, answer_tag)};
      int attempts = 0;
      const std::string reason = trim(call_with_retry([&] { return client.justify(req); }, config, attempts));
      outcome.attempts = attempts;
      if (reason.empty() || reason.size() > config.max_reason_chars || !valid_utf8(reason)) {
        outcome.status = AnnotationStatus::ReasonInvalid;
        outcome.error = reason.empty() ? "empty reason" : "reason failed output checks";
        return;
      }
      q.reason = reason;
      outcome.status = AnnotationStatus::Ok;
    } catch (const CallFailure& f) {
      outcome.status = f.status;
      outcome.attempts = f.attempts;
      outcome.error = f.error;
    }
  });
  return result;
}

std::string config_hash(const GenerateConfig& config) {
  const json j = {{"generator", std::string(kGeneratorName)},
                  {"interval_seconds", config.interval_seconds},
                  {"option_cap", config.questions.option_cap},
                  {"contour_thickness", config.questions.contour_thickness},
                  {"annotate", config.annotate},
                  {"describe_prompt", std::string(assets::kDescribeVersion)},
                  {"justify_prompt", std::string(assets::kJustifyVersion)}};
  return sha256_hex(j.dump());
}

GenerationResult generate_dataset(const std::vector<VideoAnnotation>& videos, const GenerateConfig& config,
                                  std::uint64_t seed, const RasterLoader& loader, AnnotatorClient* annotator) {
  GenerationResult result;
  DatasetManifest& m = result.manifest;
  m.provenance = {std::string(kGeneratorName), seed, config_hash(config)};

  std::set<std::string> seen_images;
  std::set<std::string> seen_videos;
  for (const auto& video : videos) {
    if (!seen_videos.insert(video.video_id).second) throw InvalidArgument("duplicate video id " + video.video_id);
    const std::uint64_t video_seed = derive_seed(seed, video.video_id);
    for (const auto& pair : sample_pairs(video, config.interval_seconds)) {
      auto questions = build_questions(video, pair, video_seed, config.questions);
      if (questions.empty()) continue;
      for (std::size_t k : {pair.first, pair.second}) {
        const auto& frame = video.frames[k];
        if (seen_images.insert(frame.image.id).second) m.images.push_back({frame.image, frame.objects});
      }
      for (auto& q : questions) m.questions.push_back(std::move(q));
    }
  }
  std::stable_sort(m.questions.begin(), m.questions.end(),
                   [](const MatchingQuestion& a, const MatchingQuestion& b) { return a.id < b.id; });

  if (config.annotate) {
    if (!annotator || !loader) throw InvalidArgument("annotation enabled without an annotator and raster loader");
    auto annotated = annotate_reasons(m.questions, m, loader, *annotator, config.annotation);
    m.questions = std::move(annotated.questions);
    for (auto& o : annotated.outcomes) {
      if (o.status != AnnotationStatus::Ok) result.failures.push_back(std::move(o));
    }
  }
  return result;
}

std::string serialize_failures(const std::vector<AnnotationOutcome>& failures) {
  std::string out;
  for (const auto& f : failures) {
    out += json{{"question_id", f.question_id},
                {"status", std::string(to_string(f.status))},
                {"attempts", f.attempts},
                {"error", f.error}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace mmvm::qagen
