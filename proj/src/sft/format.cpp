#include "sft/format.hpp"

#include <algorithm>

#include "core/error.hpp"
#include "core/json_util.hpp"
#include "core/rng.hpp"
#include "json.hpp"
#include "render/prompt_render.hpp"
#include "sft/template_assets.hpp"

namespace mmvm::sft {

using nlohmann::json;
using namespace json_util;

std::string_view to_string(Variant v) noexcept {
  return v == Variant::EditedImages ? "A_edited_images" : "B_object_tokens";
}

std::optional<Variant> parse_variant(std::string_view s) noexcept {
  if (s == "A_edited_images") return Variant::EditedImages;
  if (s == "B_object_tokens") return Variant::ObjectTokens;
  return std::nullopt;
}

std::string_view system_text() noexcept { return assets::kSystemTemplate; }
std::string_view system_text_version() noexcept { return assets::kSystemVersion; }

std::string question_block(const MatchingQuestion& q) {
  std::string out = question_prompt_text(q);
  for (const auto& o : q.options) out += "\n" + o.label + ". " + option_display_text(o);
  return out;
}

std::string answer_text(const MatchingQuestion& q) {
  std::string out = "Answer: " + q.answer;
  if (q.reason && !q.reason->empty()) out += "\n" + *q.reason;
  return out;
}

InstructionRecord format_record(const MatchingQuestion& q, Variant variant, const DatasetManifest& manifest,
                                const FormatOptions& options) {
  if (q.options.empty()) throw InvalidArgument("question " + q.id + " has no options");
  InstructionRecord r;
  r.question_id = q.id;
  r.id = q.id + (variant == Variant::EditedImages ? "#A" : "#B");
  r.variant = variant;
  r.system_text = std::string(system_text());
  std::string human;
  for (std::size_t k = 0; k < q.image_ids.size(); ++k) {
    r.image_refs.push_back(options.image_prefix + render::edited_image_name(q.id, k));
    human += "<image>\n";
  }
  human += r.system_text;
  if (variant == Variant::ObjectTokens) {
    std::vector<const AnswerOption*> marked;
    for (const auto& o : q.options) {
      if (o.referral.mode != ReferringMode::VisualPrompt || !o.referral.prompt) {
        throw InvalidArgument("question " + q.id + ": object tokens need visual referrals for every option");
      }
      if (manifest.find_object(o.referral.image_id, o.referral.track_id) == nullptr) {
        throw InvalidArgument("question " + q.id + ": no object " + o.referral.track_id + " in " +
                              o.referral.image_id + " to pool");
      }
      marked.push_back(&o);
    }
    std::stable_sort(marked.begin(), marked.end(), [](const AnswerOption* a, const AnswerOption* b) {
      return a->referral.prompt->object_tag < b->referral.prompt->object_tag;
    });
    std::string listing;
    for (const AnswerOption* o : marked) {
      const int tag = o->referral.prompt->object_tag;
      ObjectSlot slot{"<obj_" + std::to_string(tag) + ">", "object-" + std::to_string(tag), o->referral.image_id,
                      o->referral.track_id};
      listing += (listing.empty() ? "" : ", ") + slot.name + ": " + slot.placeholder;
      r.object_slots.push_back(std::move(slot));
    }
    human += " " + listing + ".";
  }
  human += "\n" + question_block(q);
  r.conversation = {{"human", std::move(human)}, {"gpt", answer_text(q)}};
  return r;
}

std::optional<Mode> parse_mode(std::string_view s) noexcept {
  if (s == "A") return Mode::A;
  if (s == "B") return Mode::B;
  if (s == "mix") return Mode::Mix;
  if (s == "both") return Mode::Both;
  return std::nullopt;
}

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::A: return "A";
    case Mode::B: return "B";
    case Mode::Mix: return "mix";
    case Mode::Both: return "both";
  }
  return "?";
}

Variant mixed_variant(double p_variant_b, std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
  return rng.bernoulli(p_variant_b) ? Variant::ObjectTokens : Variant::EditedImages;
}

std::vector<InstructionRecord> format_dataset(const DatasetManifest& manifest, Mode mode, double p_variant_b,
                                              std::uint64_t seed, const FormatOptions& options) {
  if (!(p_variant_b >= 0 && p_variant_b <= 1)) throw InvalidArgument("variant probability must be in [0, 1]");
  std::vector<InstructionRecord> out;
  out.reserve(manifest.questions.size() * (mode == Mode::Both ? 2 : 1));
  for (std::size_t i = 0; i < manifest.questions.size(); ++i) {
    const auto& q = manifest.questions[i];
    switch (mode) {
      case Mode::A: out.push_back(format_record(q, Variant::EditedImages, manifest, options)); break;
      case Mode::B: out.push_back(format_record(q, Variant::ObjectTokens, manifest, options)); break;
      case Mode::Mix: out.push_back(format_record(q, mixed_variant(p_variant_b, seed, i), manifest, options)); break;
      case Mode::Both:
        out.push_back(format_record(q, Variant::EditedImages, manifest, options));
        out.push_back(format_record(q, Variant::ObjectTokens, manifest, options));
        break;
    }
  }
  return out;
}

std::string serialize_record(const InstructionRecord& r) {
  json slots = json::array();
  for (const auto& s : r.object_slots) {
    slots.push_back({{"placeholder", s.placeholder}, {"name", s.name}, {"image_id", s.image_id}, {"track_id", s.track_id}});
  }
  json turns = json::array();
  for (const auto& t : r.conversation) turns.push_back({{"from", t.from}, {"value", t.value}});
  return json{{"id", r.id},
              {"question_id", r.question_id},
              {"variant", to_string(r.variant)},
              {"images", r.image_refs},
              {"system", r.system_text},
              {"system_version", system_text_version()},
              {"object_slots", std::move(slots)},
              {"conversations", std::move(turns)}}
      .dump();
}

InstructionRecord parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("instruction record: ") + e.what());
  }
  expect_keys(j, {"id", "question_id", "variant", "images", "system", "system_version", "object_slots", "conversations"},
              {}, "instruction record");
  InstructionRecord r;
  r.id = get_string(j, "id");
  r.question_id = get_string(j, "question_id");
  const auto v = parse_variant(get_string(j, "variant"));
  if (!v) throw ParseError("instruction record: unknown variant");
  r.variant = *v;
  for (const auto& s : j.at("images")) r.image_refs.push_back(as_string(s, "image ref"));
  r.system_text = get_string(j, "system");
  for (const auto& s : j.at("object_slots")) {
    expect_keys(s, {"placeholder", "name", "image_id", "track_id"}, {}, "object slot");
    r.object_slots.push_back(
        {get_string(s, "placeholder"), get_string(s, "name"), get_string(s, "image_id"), get_string(s, "track_id")});
  }
  for (const auto& t : j.at("conversations")) {
    expect_keys(t, {"from", "value"}, {}, "conversation turn");
    r.conversation.push_back({get_string(t, "from"), get_string(t, "value")});
  }
  return r;
}

std::string serialize_records(const std::vector<InstructionRecord>& records) {
  std::string out;
  for (const auto& r : records) out += serialize_record(r) + "\n";
  return out;
}

std::map<std::string, std::vector<double>> bind_slots(const InstructionRecord& record,
                                                      const EmbeddingProvider& provider) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& s : record.object_slots) out[s.placeholder] = provider(s.image_id, s.track_id);
  return out;
}

}  // namespace mmvm::sft
