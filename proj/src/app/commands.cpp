#include "app/commands.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/manifest.hpp"
#include "core/rng.hpp"
#include "eval/extract.hpp"
#include "eval/harness.hpp"
#include "ocl/train.hpp"
#include "pseudo/augment.hpp"
#include "qagen/annotator.hpp"
#include "qagen/ingest.hpp"
#include "qagen/pipeline.hpp"
#include "render/prompt_render.hpp"
#include "sft/format.hpp"

namespace mmvm::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void require_dir(const fs::path& dir) {
  if (dir.empty()) throw InvalidArgument("output directory is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

json rle_json(const Mask& m) {
  const Rle r = encode_rle(m);
  return {{"size", {r.height, r.width}}, {"counts", r.counts}};
}

pseudo::AugmentationConfig augmentation(const AugmentOptions& a, std::uint64_t seed) {
  pseudo::AugmentationConfig c;
  c.crop_scale_lo = a.crop_lo;
  c.crop_scale_hi = a.crop_hi;
  c.resize_target = a.resize_target;
  c.hflip_prob = a.hflip_prob;
  c.rotation_degrees = a.rotations;
  c.arbitrary_rotation_max_degrees = a.arbitrary_rotation_max;
  c.visibility_threshold = a.visibility_threshold;
  c.seed = seed;
  pseudo::validate(c);
  return c;
}

}  // namespace

json run_generate(const GenerateOptions& o) {
  require_dir(o.output_dir);
  std::vector<qagen::VideoAnnotation> videos;
  RasterLoader loader;
  std::shared_ptr<qagen::SyntheticVideoCorpus> corpus;
  if (o.source == "synthetic") {
    if (o.synthetic_videos < 1) throw InvalidArgument("synthetic video count must be >= 1");
    corpus = std::make_shared<qagen::SyntheticVideoCorpus>(qagen::make_synthetic_videos(o.synthetic_videos, o.seed));
    videos = corpus->videos;
    for (const auto& v : videos) {
      for (const auto& f : v.frames) write_png(corpus->frames.at(f.image.id), o.output_dir / f.image.uri);
    }
    loader = [corpus](const ImageRef& ref) { return corpus->load(ref); };
  } else {
    videos = qagen::load_coco_videos(o.source, {o.source_fps});
    loader = file_raster_loader(o.image_root);
  }

  qagen::GenerateConfig cfg;
  cfg.interval_seconds = o.interval_seconds;
  cfg.questions.option_cap = o.option_cap;
  cfg.questions.contour_thickness = o.contour_thickness;
  cfg.annotate = o.annotator != "none";
  cfg.annotation.max_attempts = o.max_attempts;
  cfg.annotation.backoff_base_ms = o.backoff_base_ms;
  cfg.annotation.concurrency = o.concurrency;

  std::unique_ptr<qagen::AnnotatorClient> client;
  if (o.annotator == "fixed") {
    client = std::make_unique<qagen::FixedAnnotator>("a colored object", "Both marked objects share shape and color.");
  } else if (o.annotator == "transcript") {
    client = std::make_unique<qagen::TranscriptAnnotator>(o.annotator_arg);
  } else if (o.annotator == "http") {
    client = std::make_unique<qagen::HttpAnnotator>(ChatEndpoint{o.annotator_arg, o.annotator_model, o.api_key});
  } else if (o.annotator != "none") {
    throw InvalidArgument("unknown annotator '" + o.annotator + "'");
  }
  std::unique_ptr<qagen::RecordingAnnotator> recorder;
  qagen::AnnotatorClient* active = client.get();
  if (client && !o.record_transcript.empty()) {
    recorder = std::make_unique<qagen::RecordingAnnotator>(*client, o.record_transcript);
    active = recorder.get();
  }

  const auto result = qagen::generate_dataset(videos, cfg, o.seed, loader, active);
  save_manifest(result.manifest, o.output_dir / "manifest.jsonl");
  write_file(o.output_dir / "failures.jsonl", qagen::serialize_failures(result.failures));
  return {{"videos", videos.size()},
          {"images", result.manifest.images.size()},
          {"questions", result.manifest.questions.size()},
          {"annotation_failures", result.failures.size()},
          {"config_hash", qagen::config_hash(cfg)},
          {"outputs", {"manifest.jsonl", "failures.jsonl"}}};
}

json run_render(const RenderOptions& o) {
  require_dir(o.output_dir);
  const DatasetManifest m = load_manifest(o.manifest);
  const RasterLoader loader = file_raster_loader(o.image_root);
  std::size_t written = 0;
  std::size_t questions = 0;
  for (const auto& q : m.questions) {
    if (!o.question_id.empty() && q.id != o.question_id) continue;
    ++questions;
    const auto images = render::render_question(m, q, loader, {o.resize_long_edge});
    for (std::size_t k = 0; k < images.size(); ++k) {
      write_png(images[k], o.output_dir / "images" / render::edited_image_name(q.id, k));
      ++written;
    }
  }
  if (!o.question_id.empty() && questions == 0) throw InvalidArgument("no question " + o.question_id);
  return {{"questions", questions}, {"images_written", written}};
}

json run_simulate(const SimulateOptions& o) {
  require_dir(o.output_dir);
  if (o.count < 0) throw InvalidArgument("pair count must be >= 0");
  std::vector<pseudo::CorpusImage> corpus;
  if (o.manifest.empty()) {
    corpus = pseudo::make_shapes_corpus(o.synthetic_images, o.seed);
  } else {
    const DatasetManifest m = load_manifest(o.manifest);
    const RasterLoader loader = file_raster_loader(o.image_root);
    for (const auto& e : m.images) {
      if (e.objects.empty()) continue;
      corpus.push_back({e.ref.id, loader(e.ref), e.objects});
    }
  }
  const auto cfg = augmentation(o.augment, o.seed);
  const auto pairs = pseudo::build_pretrain_stream(corpus, cfg, static_cast<std::size_t>(o.count));
  std::string log;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    char name[32];
    std::snprintf(name, sizeof name, "pair_%04zu", i);
    const fs::path dir = o.output_dir / name;
    write_png(p.view_a.image, dir / "view_a.png");
    write_png(p.view_b.image, dir / "view_b.png");
    auto view = [](const pseudo::PseudoView& v) {
      json objects = json::array();
      for (const auto& obj : v.objects) objects.push_back({{"track_id", obj.track_id}, {"mask", rle_json(obj.mask)}});
      return json{{"transform", json::parse(pseudo::transform_to_json(v.transform))}, {"objects", objects}};
    };
    const json record{{"index", i},
                      {"source_id", p.source_id},
                      {"seed", p.seed},
                      {"correspondence", p.correspondence},
                      {"view_a", view(p.view_a)},
                      {"view_b", view(p.view_b)}};
    write_file(dir / "pair.json", record.dump(2) + "\n");
    log += json{{"index", i},
                {"source_id", p.source_id},
                {"seed", p.seed},
                {"view_a", json::parse(pseudo::transform_to_json(p.view_a.transform))},
                {"view_b", json::parse(pseudo::transform_to_json(p.view_b.transform))}}
               .dump() +
           "\n";
  }
  write_file(o.output_dir / "transform_log.jsonl", log);
  return {{"corpus_images", corpus.size()}, {"pairs", pairs.size()}};
}

json run_pretrain(const PretrainOptions& o) {
  require_dir(o.output_dir);
  const auto train = pseudo::make_shapes_corpus(o.train_images, derive_seed(o.seed, "train"),
                                                {64, 256, o.train_min_objects, o.train_max_objects});
  const auto held = pseudo::make_shapes_corpus(o.heldout_pairs, derive_seed(o.seed, "heldout"),
                                               {64, 256, o.heldout_min_objects, o.heldout_max_objects});
  const auto train_cfg = augmentation(o.augment, derive_seed(o.seed, "train-aug"));
  const auto held_cfg = augmentation(o.augment, derive_seed(o.seed, "heldout-aug"));
  const auto base = ocl::make_base_encoder();
  const auto expert = ocl::make_expert_encoder();
  const ocl::Adapter initial =
      ocl::make_adapter(expert->output_dim(), o.hidden_dim, base->output_dim(), derive_seed(o.seed, "adapter"));

  std::vector<ocl::PooledPair> held_pools;
  for (int i = 0; i < o.heldout_pairs; ++i) {
    held_pools.push_back(ocl::pool_pair(pseudo::pretrain_pair(held, held_cfg, static_cast<std::size_t>(i)), *base, *expert));
  }

  ocl::TrainConfig tc;
  tc.steps = o.steps;
  tc.pairs_per_step = o.pairs_per_step;
  tc.learning_rate = o.learning_rate;
  tc.momentum = o.momentum;
  tc.loss = {o.temperature, o.cosine};
  const auto result = ocl::pretrain_adapter(
      [&](std::size_t i) { return pseudo::pretrain_pair(train, train_cfg, i); }, *base, *expert, initial, tc);

  ocl::save_adapter(o.output_dir / "adapter.bin", result.adapter);
  write_file(o.output_dir / "loss_trace.csv", ocl::loss_trace_csv(result.trace));
  const auto trained = ocl::evaluate_matching(held_pools, result.adapter, o.temperature);
  const auto control = ocl::evaluate_matching(held_pools, initial, o.temperature);
  const json metrics{{"heldout_queries", trained.total},
                     {"trained_top1", trained.fraction()},
                     {"control_top1", control.fraction()},
                     {"final_loss", result.trace.empty() ? 0.0 : result.trace.back().loss},
                     {"base_encoder", {{"name", base->name()}, {"parameter_hash", base->parameter_hash()}}},
                     {"expert_encoder", {{"name", expert->name()}, {"parameter_hash", expert->parameter_hash()}}},
                     {"adapter_hash", ocl::adapter_hash(result.adapter)}};
  write_file(o.output_dir / "metrics.json", metrics.dump(2) + "\n");
  return metrics;
}

json run_format_sft(const FormatSftOptions& o) {
  if (o.output.empty()) throw InvalidArgument("output path is required");
  const auto mode = sft::parse_mode(o.mode);
  if (!mode) throw InvalidArgument("unknown variant mode '" + o.mode + "'");
  const DatasetManifest m = load_manifest(o.manifest);
  const auto records = sft::format_dataset(m, *mode, o.p_variant_b, o.seed, {o.image_prefix});
  write_file(o.output, sft::serialize_records(records));
  std::size_t b = 0;
  for (const auto& r : records) b += r.variant == sft::Variant::ObjectTokens ? 1 : 0;
  return {{"questions", m.questions.size()},
          {"records", records.size()},
          {"variant_a", records.size() - b},
          {"variant_b", b},
          {"system_version", sft::system_text_version()}};
}

json run_evaluate(const EvaluateOptions& o) {
  require_dir(o.output_dir);
  const DatasetManifest m = load_manifest(o.manifest);
  std::unique_ptr<eval::ModelClient> client;
  if (o.client == "oracle") {
    client = std::make_unique<eval::OracleClient>(m);
  } else if (o.client == "random") {
    client = std::make_unique<eval::RandomClient>(o.seed, o.multi_image);
  } else if (o.client == "replay") {
    client = std::make_unique<eval::ReplayClient>(eval::ReplayClient::from_file(o.client_arg));
  } else if (o.client == "http") {
    client = std::make_unique<eval::HttpModelClient>(ChatEndpoint{o.client_arg, o.model, o.api_key}, o.multi_image);
  } else {
    throw InvalidArgument("unknown client '" + o.client + "'");
  }
  RasterLoader loader;
  if (!o.image_root.empty()) loader = file_raster_loader(o.image_root);
  eval::EvalConfig cfg{o.concurrency, o.max_attempts, o.backoff_base_ms, o.resize_long_edge, o.record_latency};
  const auto log = eval::run_eval(m, *client, loader, cfg);
  write_file(o.output_dir / "predictions.jsonl", eval::serialize_log(log));
  const auto report = eval::score(m, log);
  write_file(o.output_dir / "report.md", eval::emit_report({report}, eval::ReportFormat::Table));
  write_file(o.output_dir / "report.csv", eval::emit_report({report}, eval::ReportFormat::Csv));
  std::size_t failed = 0;
  for (const auto& e : log.entries) failed += e.error ? 1 : 0;
  return {{"model", report.model},
          {"questions", report.total},
          {"correct", report.correct},
          {"unanswered", report.unanswered},
          {"failed", failed},
          {"overall", eval::format_hundredths(report.overall_hundredths)}};
}

json run_report(const ReportOptions& o) {
  if (o.logs.empty()) throw InvalidArgument("at least one prediction log is required");
  if (o.output.empty()) throw InvalidArgument("output path is required");
  const auto format = eval::parse_report_format(o.format);
  if (!format) throw InvalidArgument("unknown report format '" + o.format + "'");
  const DatasetManifest m = load_manifest(o.manifest);
  std::vector<eval::EvalReport> reports;
  for (const auto& path : o.logs) reports.push_back(eval::score(m, eval::load_log(path)));
  write_file(o.output, eval::emit_report(reports, *format));
  json rows = json::array();
  for (const auto& r : reports) rows.push_back({{"model", r.model}, {"overall", eval::format_hundredths(r.overall_hundredths)}});
  return {{"reports", rows}};
}

json run_selftest(std::uint64_t seed) {
  json checks = json::array();
  bool all = true;
  auto check = [&](const std::string& name, auto&& fn) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    all = all && ok;
    checks.push_back({{"name", name}, {"pass", ok}, {"detail", detail}});
  };
  Rng rng(seed);

  check("contrastive gradient vs finite differences", [&](std::string& detail) {
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t d = 4 + rng.uniform_index(13);
      const std::size_t k = 1 + rng.uniform_index(6);
      auto vec = [&] {
        std::vector<double> v(d);
        for (double& x : v) x = rng.normal();
        return v;
      };
      std::vector<double> a = vec(), p = vec();
      std::vector<std::vector<double>> ns;
      for (std::size_t i = 0; i < k; ++i) ns.push_back(vec());
      auto loss = [&] {
        std::vector<std::span<const double>> views(ns.begin(), ns.end());
        return ocl::contrastive_loss(a, p, views, {0.5});
      };
      const auto r = loss();
      for (std::size_t j = 0; j < d; ++j) {
        const double h = 1e-5;
        const double saved = a[j];
        a[j] = saved + h;
        const double up = loss().loss;
        a[j] = saved - h;
        const double down = loss().loss;
        a[j] = saved;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - r.grad_anchor[j]) / std::max(1.0, std::abs(fd)));
      }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max relative error %.3g", worst);
    detail = buf;
    return worst < 1e-4;
  });

  check("loss closed forms", [&](std::string& detail) {
    const std::vector<double> a{1, 0}, p{1, 0}, n{0, 1};
    const double zero = ocl::contrastive_loss(a, p, {}, {}).loss;
    std::vector<std::span<const double>> eq(3, std::span<const double>(p));
    const double uniform = ocl::contrastive_loss(a, p, eq, {}).loss;
    std::vector<std::span<const double>> one{std::span<const double>(n)};
    const double ref = ocl::contrastive_loss(a, p, one, {}).loss;
    detail = "zero=" + std::to_string(zero) + " uniform=" + std::to_string(uniform);
    return zero == 0.0 && std::abs(uniform - std::log(4.0)) < 1e-10 && std::abs(ref - std::log(1 + std::exp(-1.0))) < 1e-12;
  });

  check("rle round trip", [&](std::string&) {
    for (int trial = 0; trial < 20; ++trial) {
      Mask m(1 + static_cast<int>(rng.uniform_index(20)), 1 + static_cast<int>(rng.uniform_index(20)));
      for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) m.set(x, y, rng.bernoulli(0.4));
      }
      if (decode_rle(encode_rle(m)) != m) return false;
    }
    return true;
  });

  check("empty render is identity", [&](std::string&) {
    Image img(17, 11, Rgb{10, 20, 30});
    img.set(3, 4, Rgb{200, 1, 2});
    return render::render_prompts(img, {}) == img;
  });

  check("scorer rounding", [&](std::string& detail) {
    detail = eval::format_hundredths(eval::percent_hundredths(644, 1510)) + " " +
             eval::format_hundredths(eval::percent_hundredths(575, 1510));
    return detail == "42.65 38.08";
  });

  check("choice extraction", [&](std::string&) {
    const std::vector<std::string> labels{"A", "B", "C", "D"};
    return eval::extract_choice("The answer is B.", labels) == std::optional<std::string>("B") &&
           !eval::extract_choice("Both A and C look right", labels) &&
           eval::extract_choice("Answer: (D)", labels) == std::optional<std::string>("D");
  });

  return {{"passed", all}, {"checks", checks}};
}

}  // namespace mmvm::app
