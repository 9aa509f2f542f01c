#include "mmvm/mmvm.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "app/commands.hpp"
#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/manifest.hpp"
#include "ocl/adapter.hpp"
#include "ocl/features.hpp"
#include "ocl/loss.hpp"
#include "qagen/prompt_assets.hpp"
#include "sft/format.hpp"

struct mmvm_manifest {
  mmvm::DatasetManifest value;
};

namespace {

thread_local std::string last_error;

template <typename F>
mmvm_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return MMVM_OK;
  } catch (const mmvm::InvalidArgument& e) {
    last_error = e.what();
    return MMVM_ERR_INVALID_ARGUMENT;
  } catch (const mmvm::ParseError& e) {
    last_error = e.what();
    return MMVM_ERR_PARSE;
  } catch (const mmvm::IoError& e) {
    last_error = e.what();
    return MMVM_ERR_IO;
  } catch (const mmvm::TransportError& e) {
    last_error = e.what();
    return MMVM_ERR_TRANSPORT;
  } catch (const mmvm::NumericError& e) {
    last_error = std::string(e.what()) + " (step " + std::to_string(e.step()) + ")";
    return MMVM_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MMVM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MMVM_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

std::string str(const char* s) { return s == nullptr ? std::string() : std::string(s); }

void need(const void* p, const char* what) {
  if (p == nullptr) throw mmvm::InvalidArgument(std::string(what) + " is null");
}

void put_summary(char** out, const nlohmann::json& summary) {
  if (out != nullptr) *out = dup_string(summary.dump());
}

void copy_hex(const std::string& hex, char out[65]) {
  std::memcpy(out, hex.data(), 64);
  out[64] = '\0';
}

mmvm::app::AugmentOptions augment(const mmvm_augment_options& a) {
  mmvm::app::AugmentOptions o;
  o.crop_lo = a.crop_lo;
  o.crop_hi = a.crop_hi;
  o.resize_target = a.resize_target;
  o.hflip_prob = a.hflip_prob;
  if (a.rotations != nullptr) o.rotations.assign(a.rotations, a.rotations + a.rotation_count);
  o.arbitrary_rotation_max = a.arbitrary_rotation_max;
  o.visibility_threshold = a.visibility_threshold;
  return o;
}

void augment_defaults(mmvm_augment_options* a) {
  static const int kRotations[] = {0, 90, 180, 270};
  const mmvm::app::AugmentOptions d;
  a->crop_lo = d.crop_lo;
  a->crop_hi = d.crop_hi;
  a->resize_target = d.resize_target;
  a->hflip_prob = d.hflip_prob;
  a->rotations = kRotations;
  a->rotation_count = 4;
  a->arbitrary_rotation_max = d.arbitrary_rotation_max;
  a->visibility_threshold = d.visibility_threshold;
}

}  // namespace

extern "C" {

const char* mmvm_last_error(void) { return last_error.c_str(); }

const char* mmvm_version(void) { return "1.0.0"; }

const char* mmvm_format_versions(void) {
  static const std::string versions =
      nlohmann::json{{"manifest", "1"},
                     {"prediction_log", "1"},
                     {"adapter_checkpoint", mmvm::ocl::kCheckpointVersion},
                     {"describe_prompt", mmvm::qagen::assets::kDescribeVersion},
                     {"justify_prompt", mmvm::qagen::assets::kJustifyVersion},
                     {"system_prompt", mmvm::sft::system_text_version()}}
          .dump();
  return versions.c_str();
}

void mmvm_free(void* p) { std::free(p); }

mmvm_status mmvm_manifest_load(const char* path, mmvm_manifest** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mmvm_manifest{mmvm::load_manifest(path)};
  });
}

mmvm_status mmvm_manifest_parse(const char* text, size_t length, mmvm_manifest** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new mmvm_manifest{mmvm::parse_manifest(std::string(text, length))};
  });
}

mmvm_status mmvm_manifest_serialize(const mmvm_manifest* m, char** out, size_t* length) {
  return guarded([&] {
    need(m, "manifest");
    need(out, "out");
    const std::string s = mmvm::serialize_manifest(m->value);
    *out = dup_string(s);
    if (length != nullptr) *length = s.size();
  });
}

mmvm_status mmvm_manifest_save(const mmvm_manifest* m, const char* path) {
  return guarded([&] {
    need(m, "manifest");
    need(path, "path");
    mmvm::save_manifest(m->value, path);
  });
}

void mmvm_manifest_free(mmvm_manifest* m) { delete m; }

size_t mmvm_manifest_image_count(const mmvm_manifest* m) { return m == nullptr ? 0 : m->value.images.size(); }

size_t mmvm_manifest_question_count(const mmvm_manifest* m) { return m == nullptr ? 0 : m->value.questions.size(); }

mmvm_status mmvm_manifest_hash(const mmvm_manifest* m, char out[65]) {
  return guarded([&] {
    need(m, "manifest");
    need(out, "out");
    copy_hex(mmvm::manifest_hash(m->value), out);
  });
}

mmvm_status mmvm_manifest_validate(const mmvm_manifest* m, const char* image_root, char** violations_json,
                                   size_t* violation_count) {
  return guarded([&] {
    need(m, "manifest");
    mmvm::ValidationOptions opts;
    if (image_root != nullptr && *image_root != '\0') opts.image_root = image_root;
    const auto violations = mmvm::validate_manifest(m->value, opts);
    if (violation_count != nullptr) *violation_count = violations.size();
    if (violations_json != nullptr) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& v : violations) arr.push_back({{"entity", v.entity}, {"rule", v.rule}, {"detail", v.detail}});
      *violations_json = dup_string(arr.dump());
    }
  });
}

mmvm_status mmvm_sha256_file(const char* path, char out[65]) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    copy_hex(mmvm::sha256_file(path), out);
  });
}

mmvm_status mmvm_contrastive_loss(const double* anchor, const double* positive, const double* negatives, size_t k,
                                  size_t dim, double temperature, int cosine, double* loss, double* grad_anchor,
                                  double* grad_positive, double* grad_negatives) {
  return guarded([&] {
    need(anchor, "anchor");
    need(positive, "positive");
    need(loss, "loss");
    if (k > 0) need(negatives, "negatives");
    std::vector<std::span<const double>> ns;
    for (size_t i = 0; i < k; ++i) ns.emplace_back(negatives + i * dim, dim);
    const auto r = mmvm::ocl::contrastive_loss({anchor, dim}, {positive, dim}, ns, {temperature, cosine != 0});
    *loss = r.loss;
    if (grad_anchor != nullptr) std::copy(r.grad_anchor.begin(), r.grad_anchor.end(), grad_anchor);
    if (grad_positive != nullptr) std::copy(r.grad_positive.begin(), r.grad_positive.end(), grad_positive);
    if (grad_negatives != nullptr) {
      for (size_t i = 0; i < k; ++i) std::copy(r.grad_negatives[i].begin(), r.grad_negatives[i].end(), grad_negatives + i * dim);
    }
  });
}

mmvm_status mmvm_masked_average_pool(const double* feature_map, int channels, int height, int width, int stride,
                                     const uint8_t* mask, int mask_width, int mask_height, double* out) {
  return guarded([&] {
    need(feature_map, "feature_map");
    need(mask, "mask");
    need(out, "out");
    mmvm::ocl::FeatureMap fm(channels, height, width, stride);
    std::copy(feature_map, feature_map + fm.data.size(), fm.data.begin());
    mmvm::Mask m(mask_width, mask_height);
    for (int y = 0; y < mask_height; ++y) {
      for (int x = 0; x < mask_width; ++x) m.set(x, y, mask[static_cast<size_t>(y) * mask_width + x] != 0);
    }
    const auto v = mmvm::ocl::masked_average_pool(fm, m);
    std::copy(v.begin(), v.end(), out);
  });
}

void mmvm_generate_options_init(mmvm_generate_options* o) {
  const mmvm::app::GenerateOptions d;
  *o = {};
  o->source = "synthetic";
  o->synthetic_videos = d.synthetic_videos;
  o->source_fps = d.source_fps;
  o->interval_seconds = d.interval_seconds;
  o->option_cap = d.option_cap;
  o->contour_thickness = d.contour_thickness;
  o->seed = d.seed;
  o->annotator = "none";
  o->concurrency = d.concurrency;
  o->max_attempts = d.max_attempts;
  o->backoff_base_ms = d.backoff_base_ms;
}

mmvm_status mmvm_generate(const mmvm_generate_options* o, char** summary_json) {
  return guarded([&] {
    need(o, "options");
    mmvm::app::GenerateOptions g;
    g.source = str(o->source);
    g.image_root = str(o->image_root);
    g.synthetic_videos = o->synthetic_videos;
    g.source_fps = o->source_fps;
    g.interval_seconds = o->interval_seconds;
    g.option_cap = o->option_cap;
    g.contour_thickness = o->contour_thickness;
    g.seed = o->seed;
    g.annotator = o->annotator == nullptr ? "none" : o->annotator;
    g.annotator_arg = str(o->annotator_arg);
    g.annotator_model = str(o->annotator_model);
    g.api_key = str(o->api_key);
    g.record_transcript = str(o->record_transcript);
    g.concurrency = o->concurrency;
    g.max_attempts = o->max_attempts;
    g.backoff_base_ms = o->backoff_base_ms;
    g.output_dir = str(o->output_dir);
    put_summary(summary_json, mmvm::app::run_generate(g));
  });
}

void mmvm_render_options_init(mmvm_render_options* o) { *o = {}; }

mmvm_status mmvm_render(const mmvm_render_options* o, char** summary_json) {
  return guarded([&] {
    need(o, "options");
    put_summary(summary_json, mmvm::app::run_render({str(o->manifest), str(o->image_root), str(o->output_dir),
                                                     o->resize_long_edge, str(o->question_id)}));
  });
}

void mmvm_simulate_options_init(mmvm_simulate_options* o) {
  const mmvm::app::SimulateOptions d;
  *o = {};
  o->synthetic_images = d.synthetic_images;
  o->count = d.count;
  augment_defaults(&o->augment);
  o->seed = d.seed;
}

mmvm_status mmvm_simulate(const mmvm_simulate_options* o, char** summary_json) {
  return guarded([&] {
    need(o, "options");
    mmvm::app::SimulateOptions s;
    s.manifest = str(o->manifest);
    s.image_root = str(o->image_root);
    s.synthetic_images = o->synthetic_images;
    s.count = o->count;
    s.augment = augment(o->augment);
    s.seed = o->seed;
    s.output_dir = str(o->output_dir);
    put_summary(summary_json, mmvm::app::run_simulate(s));
  });
}

void mmvm_pretrain_options_init(mmvm_pretrain_options* o) {
  const mmvm::app::PretrainOptions d;
  *o = {};
  o->train_images = d.train_images;
  o->train_min_objects = d.train_min_objects;
  o->train_max_objects = d.train_max_objects;
  o->heldout_pairs = d.heldout_pairs;
  o->heldout_min_objects = d.heldout_min_objects;
  o->heldout_max_objects = d.heldout_max_objects;
  augment_defaults(&o->augment);
  o->steps = d.steps;
  o->pairs_per_step = d.pairs_per_step;
  o->learning_rate = d.learning_rate;
  o->momentum = d.momentum;
  o->temperature = d.temperature;
  o->cosine = d.cosine ? 1 : 0;
  o->hidden_dim = d.hidden_dim;
  o->seed = d.seed;
}

mmvm_status mmvm_pretrain(const mmvm_pretrain_options* o, char** summary_json) {
  return guarded([&] {
    need(o, "options");
    mmvm::app::PretrainOptions p;
    p.train_images = o->train_images;
    p.train_min_objects = o->train_min_objects;
    p.train_max_objects = o->train_max_objects;
    p.heldout_pairs = o->heldout_pairs;
    p.heldout_min_objects = o->heldout_min_objects;
    p.heldout_max_objects = o->heldout_max_objects;
    p.augment = augment(o->augment);
    p.steps = o->steps;
    p.pairs_per_step = o->pairs_per_step;
    p.learning_rate = o->learning_rate;
    p.momentum = o->momentum;
    p.temperature = o->temperature;
    p.cosine = o->cosine != 0;
    p.hidden_dim = o->hidden_dim;
    p.seed = o->seed;
    p.output_dir = str(o->output_dir);
    put_summary(summary_json, mmvm::app::run_pretrain(p));
  });
}

void mmvm_format_sft_options_init(mmvm_format_sft_options* o) {
  *o = {};
  o->mode = "mix";
  o->p_variant_b = 0.5;
  o->image_prefix = "images/";
}

mmvm_status mmvm_format_sft(const mmvm_format_sft_options* o, char** summary_json) {
  return guarded([&] {
    need(o, "options");
    put_summary(summary_json, mmvm::app::run_format_sft({str(o->manifest), o->mode == nullptr ? "mix" : o->mode,
                                                         o->p_variant_b, o->seed, str(o->image_prefix), str(o->output)}));
  });
}

void mmvm_evaluate_options_init(mmvm_evaluate_options* o) {
  const mmvm::app::EvaluateOptions d;
  *o = {};
  o->client = "oracle";
  o->multi_image = 1;
  o->concurrency = d.concurrency;
  o->max_attempts = d.max_attempts;
  o->backoff_base_ms = d.backoff_base_ms;
  o->record_latency = 1;
}

mmvm_status mmvm_evaluate(const mmvm_evaluate_options* o, char** summary_json) {
  return guarded([&] {
    need(o, "options");
    mmvm::app::EvaluateOptions e;
    e.manifest = str(o->manifest);
    e.image_root = str(o->image_root);
    e.client = o->client == nullptr ? "oracle" : o->client;
    e.client_arg = str(o->client_arg);
    e.model = str(o->model);
    e.api_key = str(o->api_key);
    e.multi_image = o->multi_image != 0;
    e.concurrency = o->concurrency;
    e.max_attempts = o->max_attempts;
    e.backoff_base_ms = o->backoff_base_ms;
    e.resize_long_edge = o->resize_long_edge;
    e.record_latency = o->record_latency != 0;
    e.seed = o->seed;
    e.output_dir = str(o->output_dir);
    put_summary(summary_json, mmvm::app::run_evaluate(e));
  });
}

void mmvm_report_options_init(mmvm_report_options* o) {
  *o = {};
  o->format = "table";
}

mmvm_status mmvm_report(const mmvm_report_options* o, char** summary_json) {
  return guarded([&] {
    need(o, "options");
    mmvm::app::ReportOptions r;
    r.manifest = str(o->manifest);
    for (size_t i = 0; i < o->log_count; ++i) r.logs.emplace_back(str(o->logs[i]));
    r.format = o->format == nullptr ? "table" : o->format;
    r.output = str(o->output);
    put_summary(summary_json, mmvm::app::run_report(r));
  });
}

mmvm_status mmvm_selftest(uint64_t seed, int* passed, char** summary_json) {
  return guarded([&] {
    const auto summary = mmvm::app::run_selftest(seed);
    if (passed != nullptr) *passed = summary.at("passed").get<bool>() ? 1 : 0;
    put_summary(summary_json, summary);
  });
}

}  // extern "C"
