// Command-line front end over the mmvm C API.
#include <mmvm/mmvm.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kChecksFailed = 1, kUsage = 2, kConfig = 3, kRuntime = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_name(const std::string& option) {
  std::string out = "MMVM_";
  for (char c : option) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Flat key -> value view of a TOML/INI config file: top-level keys apply to
// every command, [command] sections override them.
std::map<std::string, std::string> read_config(const std::string& path, const std::string& command) {
  std::map<std::string, std::string> global, section;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    if (item.parents.empty() || (item.parents.size() == 1 && item.parents[0] == "default")) {
      global[key] = value;
    } else if (item.parents.size() == 1 && item.parents[0] == command) {
      section[key] = value;
    }
  }
  for (auto& [k, v] : section) global[k] = v;
  return global;
}

struct Resolved {
  json values = json::object();
  json sources = json::object();
};

// Fills options not given on the command line from the environment, then
// the config file; records every option's effective value and origin.
Resolved layer(CLI::App& sub, const std::string& config_path) {
  std::map<std::string, std::string> config;
  if (!config_path.empty()) config = read_config(config_path, sub.get_name());
  std::set<std::string> known;
  Resolved r;
  for (CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    known.insert(name);
    std::string source = "default";
    if (opt->count() > 0) {
      source = "flag";
    } else {
      std::optional<std::string> value;
      if (const char* env = std::getenv(env_name(name).c_str()); env != nullptr && *env != '\0') {
        value = env;
        source = "env";
      } else if (const auto it = config.find(name); it != config.end()) {
        value = it->second;
        source = "config";
      }
      if (value) {
        try {
          opt->clear();
          opt->add_result(*value);
          opt->run_callback();
        } catch (const CLI::Error& e) {
          throw ConfigError("invalid " + source + " value for --" + name + ": " + e.what());
        }
      }
    }
    std::string shown;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) shown += (i ? "," : "") + res[i];
    } else {
      shown = opt->get_default_str();
    }
    if (name == "api-key" && !shown.empty()) shown = "<redacted>";
    r.values[name] = shown;
    r.sources[name] = source;
  }
  for (const auto& [k, _] : config) {
    if (!known.contains(k) && k != "config") throw ConfigError("unknown config key '" + k + "' for " + sub.get_name());
  }
  return r;
}

std::string hash_file(const fs::path& p) {
  char hex[65];
  if (mmvm_sha256_file(p.string().c_str(), hex) != MMVM_OK) throw std::runtime_error(mmvm_last_error());
  return hex;
}

json hash_tree(const fs::path& root, const fs::path& skip) {
  json out = json::object();
  if (fs::is_regular_file(root)) {
    out[root.filename().string()] = hash_file(root);
    return out;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path() != skip) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out[fs::relative(f, root).generic_string()] = hash_file(f);
  return out;
}

struct CallFailed {
  mmvm_status status;
  std::string message;
};

json take_summary(mmvm_status st, char* summary) {
  if (st != MMVM_OK) throw CallFailed{st, mmvm_last_error()};
  json j = json::parse(summary);
  mmvm_free(summary);
  return j;
}

const char* cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal visual matching toolkit: dataset generation, visual prompts, "
               "pseudo-video pre-training, SFT formatting and evaluation."};
  app.require_subcommand(0, 1);
  app.option_defaults()->always_capture_default();
  std::string config_path;
  app.add_option("--config", config_path, "TOML/INI config file (top-level keys or [command] sections)")
      ->check(CLI::ExistingFile);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print artifact and format versions");

  // generate
  std::string g_source = "synthetic", g_image_root, g_annotator = "none", g_annotator_arg, g_model, g_api_key,
              g_record, g_out;
  int g_videos = 20, g_cap = 0, g_thickness = 3, g_conc = 1, g_attempts = 3, g_backoff = 200;
  double g_fps = 5.0, g_interval = 1.0;
  std::uint64_t g_seed = 0;
  auto* gen = app.add_subcommand("generate", "Build a matching-question manifest from annotated videos");
  gen->add_option("--source", g_source, "\"synthetic\" or a YouTube-VIS style annotation JSON");
  gen->add_option("--image-root", g_image_root, "Frame directory for JSON sources");
  gen->add_option("--synthetic-videos", g_videos, "Videos in the synthetic corpus")->check(CLI::PositiveNumber);
  gen->add_option("--source-fps", g_fps, "Frame rate of JSON sources")->check(CLI::PositiveNumber);
  gen->add_option("--interval", g_interval, "Sampling interval, seconds")->check(CLI::PositiveNumber);
  gen->add_option("--option-cap", g_cap, "Max options per question (0 = all objects)")->check(CLI::NonNegativeNumber);
  gen->add_option("--contour-thickness", g_thickness, "Contour band width, pixels")->check(CLI::PositiveNumber);
  gen->add_option("--annotator", g_annotator, "Reason annotator")
      ->check(CLI::IsMember({"none", "fixed", "transcript", "http"}));
  gen->add_option("--annotator-arg", g_annotator_arg, "Transcript path or endpoint base URL");
  gen->add_option("--annotator-model", g_model, "Model name for the http annotator");
  gen->add_option("--api-key", g_api_key, "Bearer token for http endpoints");
  gen->add_option("--record-transcript", g_record, "Append annotator responses to this JSONL file");
  gen->add_option("--concurrency", g_conc, "Parallel annotation calls")->check(CLI::PositiveNumber);
  gen->add_option("--max-attempts", g_attempts, "Attempts per annotation call")->check(CLI::PositiveNumber);
  gen->add_option("--backoff-ms", g_backoff, "Base retry backoff")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", g_seed, "Random seed");
  gen->add_option("--output-dir", g_out, "Output directory");

  // render
  std::string r_manifest, r_root, r_out, r_qid;
  int r_resize = 0;
  auto* ren = app.add_subcommand("render", "Draw visual prompts for every question");
  ren->add_option("--manifest", r_manifest, "Manifest JSONL");
  ren->add_option("--image-root", r_root, "Directory the image uris resolve against");
  ren->add_option("--output-dir", r_out, "Output directory");
  ren->add_option("--resize", r_resize, "Scale long edge to this size and pad (0 = off)")->check(CLI::NonNegativeNumber);
  ren->add_option("--question", r_qid, "Render only this question");

  // augmentation settings shared by simulate and pretrain
  struct Aug {
    double crop_lo = 0.6, crop_hi = 1.0, hflip = 0.5, arbitrary = 0.0;
    int resize = 224, visibility = 16;
    std::vector<int> rotations = {0, 90, 180, 270};
  };
  auto add_aug = [](CLI::App* s, Aug& a) {
    s->add_option("--crop-lo", a.crop_lo, "Smallest crop area fraction");
    s->add_option("--crop-hi", a.crop_hi, "Largest crop area fraction");
    s->add_option("--resize-target", a.resize, "Long edge after resize (0 = keep)")->check(CLI::NonNegativeNumber);
    s->add_option("--hflip-prob", a.hflip, "Horizontal flip probability")->check(CLI::Range(0.0, 1.0));
    s->add_option("--rotations", a.rotations, "Right-angle rotation set, degrees")->delimiter(',');
    s->add_option("--arbitrary-rotation", a.arbitrary, "Max |angle| for arbitrary rotation (0 = right angles)")
        ->check(CLI::NonNegativeNumber);
    s->add_option("--visibility", a.visibility, "Minimum transformed mask area, pixels")->check(CLI::PositiveNumber);
  };
  auto fill_aug = [](mmvm_augment_options& o, const Aug& a) {
    o.crop_lo = a.crop_lo;
    o.crop_hi = a.crop_hi;
    o.resize_target = a.resize;
    o.hflip_prob = a.hflip;
    o.rotations = a.rotations.data();
    o.rotation_count = a.rotations.size();
    o.arbitrary_rotation_max = a.arbitrary;
    o.visibility_threshold = a.visibility;
  };

  // simulate
  std::string s_manifest, s_root, s_out;
  int s_images = 20, s_count = 10;
  std::uint64_t s_seed = 0;
  Aug s_aug;
  auto* sim = app.add_subcommand("simulate", "Write pseudo-video pairs and their transform log");
  auto* s_manifest_opt = sim->add_option("--manifest", s_manifest, "Source manifest (default: synthetic shapes)");
  sim->add_option("--image-root", s_root, "Directory the image uris resolve against");
  auto* s_images_opt = sim->add_option("--synthetic-images", s_images, "Synthetic corpus size")->check(CLI::PositiveNumber);
  s_manifest_opt->excludes(s_images_opt);
  sim->add_option("--count", s_count, "Pairs to write")->check(CLI::NonNegativeNumber);
  add_aug(sim, s_aug);
  sim->add_option("--seed", s_seed, "Random seed");
  sim->add_option("--output-dir", s_out, "Output directory");

  // pretrain
  mmvm_pretrain_options p_opts;
  mmvm_pretrain_options_init(&p_opts);
  std::string p_out;
  bool p_cosine = false;
  Aug p_aug;
  auto* pre = app.add_subcommand("pretrain", "Train the expert-to-base adapter on synthetic pseudo videos");
  pre->add_option("--train-images", p_opts.train_images, "Training corpus size")->check(CLI::PositiveNumber);
  pre->add_option("--train-min-objects", p_opts.train_min_objects)->check(CLI::PositiveNumber);
  pre->add_option("--train-max-objects", p_opts.train_max_objects)->check(CLI::PositiveNumber);
  pre->add_option("--heldout-pairs", p_opts.heldout_pairs, "Held-out pairs for matching accuracy")->check(CLI::NonNegativeNumber);
  pre->add_option("--heldout-min-objects", p_opts.heldout_min_objects)->check(CLI::PositiveNumber);
  pre->add_option("--heldout-max-objects", p_opts.heldout_max_objects)->check(CLI::PositiveNumber);
  add_aug(pre, p_aug);
  pre->add_option("--steps", p_opts.steps, "Optimizer steps")->check(CLI::NonNegativeNumber);
  pre->add_option("--pairs-per-step", p_opts.pairs_per_step)->check(CLI::PositiveNumber);
  pre->add_option("--lr", p_opts.learning_rate, "Learning rate")->check(CLI::NonNegativeNumber);
  pre->add_option("--momentum", p_opts.momentum)->check(CLI::Range(0.0, 0.999999));
  pre->add_option("--temperature", p_opts.temperature)->check(CLI::PositiveNumber);
  pre->add_flag("--cosine", p_cosine, "Cosine similarity instead of raw dot products");
  pre->add_option("--hidden-dim", p_opts.hidden_dim, "Adapter hidden width")->check(CLI::PositiveNumber);
  pre->add_option("--seed", p_opts.seed, "Random seed");
  pre->add_option("--output-dir", p_out, "Output directory");

  // format-sft
  std::string f_manifest, f_variant = "mix", f_prefix = "images/", f_out;
  double f_p = 0.5;
  std::uint64_t f_seed = 0;
  auto* fmt = app.add_subcommand("format-sft", "Serialize questions as instruction-tuning records");
  fmt->add_option("--manifest", f_manifest, "Manifest JSONL");
  fmt->add_option("--variant", f_variant, "A, B, mix or both")->check(CLI::IsMember({"A", "B", "mix", "both"}));
  fmt->add_option("--p", f_p, "Probability of variant B under mix")->check(CLI::Range(0.0, 1.0));
  fmt->add_option("--seed", f_seed, "Random seed");
  fmt->add_option("--image-prefix", f_prefix, "Prefix for edited image paths");
  fmt->add_option("--output", f_out, "Output JSONL");

  // evaluate
  std::string e_manifest, e_root, e_client = "oracle", e_arg, e_model, e_key, e_out;
  bool e_single = false, e_no_latency = false;
  int e_conc = 1, e_attempts = 3, e_backoff = 200, e_resize = 0;
  std::uint64_t e_seed = 0;
  auto* ev = app.add_subcommand("evaluate", "Ask a model every question and score it");
  ev->add_option("--manifest", e_manifest, "Manifest JSONL");
  ev->add_option("--image-root", e_root, "Directory the image uris resolve against (empty = text only)");
  ev->add_option("--client", e_client, "oracle, random, replay or http")
      ->check(CLI::IsMember({"oracle", "random", "replay", "http"}));
  ev->add_option("--client-arg", e_arg, "Replay JSONL path or endpoint base URL");
  ev->add_option("--model", e_model, "Model name for the http client");
  ev->add_option("--api-key", e_key, "Bearer token for http endpoints");
  ev->add_flag("--single-image", e_single, "Client takes one image; question images are stacked vertically");
  ev->add_option("--concurrency", e_conc)->check(CLI::PositiveNumber);
  ev->add_option("--max-attempts", e_attempts)->check(CLI::PositiveNumber);
  ev->add_option("--backoff-ms", e_backoff)->check(CLI::NonNegativeNumber);
  ev->add_option("--resize", e_resize, "Scale long edge to this size and pad (0 = off)")->check(CLI::NonNegativeNumber);
  ev->add_flag("--no-latency", e_no_latency, "Record zero latencies so logs are byte-reproducible");
  ev->add_option("--seed", e_seed, "Seed for the random client");
  ev->add_option("--output-dir", e_out, "Output directory");

  // report
  std::string rep_manifest, rep_format = "table", rep_out;
  std::vector<std::string> rep_logs;
  auto* rep = app.add_subcommand("report", "Score prediction logs and emit a leaderboard");
  rep->add_option("--manifest", rep_manifest, "Manifest JSONL");
  rep->add_option("--log", rep_logs, "Prediction log (repeatable)");
  rep->add_option("--format", rep_format, "table, csv or plot")->check(CLI::IsMember({"table", "csv", "plot"}));
  rep->add_option("--output", rep_out, "Output file");

  // selftest
  std::uint64_t t_seed = 0;
  auto* self = app.add_subcommand("selftest", "Run built-in invariant checks");
  self->add_option("--seed", t_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (show_version) {
    std::cout << "mmvm " << mmvm_version() << "\nformats " << mmvm_format_versions() << "\n";
    return kOk;
  }
  CLI::App* sub = nullptr;
  for (CLI::App* s : app.get_subcommands()) sub = s;
  if (sub == nullptr) {
    std::cerr << app.help();
    return kUsage;
  }

  Resolved resolved;
  try {
    resolved = layer(*sub, config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  const std::string name = sub->get_name();

  auto require = [&](const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(name + " requires --" + std::string(flag));
  };

  json inputs = json::object();
  auto input = [&](const std::string& path) {
    if (!path.empty() && fs::is_regular_file(path)) inputs[path] = hash_file(path);
  };
  if (!config_path.empty()) input(config_path);

  fs::path out_root;   // directory or file whose contents are hashed
  fs::path run_path;   // where the run manifest goes
  json summary;
  try {
    if (name == "generate") {
      require(g_out, "output-dir");
      if (g_source != "synthetic") {
        require(g_image_root, "image-root");
        input(g_source);
      }
      if ((g_annotator == "transcript" || g_annotator == "http") && g_annotator_arg.empty()) {
        throw ConfigError("--annotator " + g_annotator + " requires --annotator-arg");
      }
      if (g_annotator == "transcript") input(g_annotator_arg);
      mmvm_generate_options o;
      mmvm_generate_options_init(&o);
      o.source = g_source.c_str();
      o.image_root = cstr(g_image_root);
      o.synthetic_videos = g_videos;
      o.source_fps = g_fps;
      o.interval_seconds = g_interval;
      o.option_cap = g_cap;
      o.contour_thickness = g_thickness;
      o.seed = g_seed;
      o.annotator = g_annotator.c_str();
      o.annotator_arg = cstr(g_annotator_arg);
      o.annotator_model = cstr(g_model);
      o.api_key = cstr(g_api_key);
      o.record_transcript = cstr(g_record);
      o.concurrency = g_conc;
      o.max_attempts = g_attempts;
      o.backoff_base_ms = g_backoff;
      o.output_dir = g_out.c_str();
      char* s = nullptr;
      const mmvm_status st = mmvm_generate(&o, &s);
      summary = take_summary(st, s);
      out_root = g_out;
    } else if (name == "render") {
      require(r_manifest, "manifest");
      require(r_root, "image-root");
      require(r_out, "output-dir");
      input(r_manifest);
      mmvm_render_options o;
      mmvm_render_options_init(&o);
      o.manifest = r_manifest.c_str();
      o.image_root = r_root.c_str();
      o.output_dir = r_out.c_str();
      o.resize_long_edge = r_resize;
      o.question_id = cstr(r_qid);
      char* s = nullptr;
      const mmvm_status st = mmvm_render(&o, &s);
      summary = take_summary(st, s);
      out_root = r_out;
    } else if (name == "simulate") {
      require(s_out, "output-dir");
      if (!s_manifest.empty()) {
        require(s_root, "image-root");
        input(s_manifest);
      }
      mmvm_simulate_options o;
      mmvm_simulate_options_init(&o);
      o.manifest = cstr(s_manifest);
      o.image_root = cstr(s_root);
      o.synthetic_images = s_images;
      o.count = s_count;
      fill_aug(o.augment, s_aug);
      o.seed = s_seed;
      o.output_dir = s_out.c_str();
      char* s = nullptr;
      const mmvm_status st = mmvm_simulate(&o, &s);
      summary = take_summary(st, s);
      out_root = s_out;
    } else if (name == "pretrain") {
      require(p_out, "output-dir");
      if (p_opts.train_min_objects > p_opts.train_max_objects ||
          p_opts.heldout_min_objects > p_opts.heldout_max_objects) {
        throw ConfigError("object count ranges must satisfy min <= max");
      }
      fill_aug(p_opts.augment, p_aug);
      p_opts.cosine = p_cosine ? 1 : 0;
      p_opts.output_dir = p_out.c_str();
      char* s = nullptr;
      const mmvm_status st = mmvm_pretrain(&p_opts, &s);
      summary = take_summary(st, s);
      out_root = p_out;
    } else if (name == "format-sft") {
      require(f_manifest, "manifest");
      require(f_out, "output");
      input(f_manifest);
      mmvm_format_sft_options o;
      mmvm_format_sft_options_init(&o);
      o.manifest = f_manifest.c_str();
      o.mode = f_variant.c_str();
      o.p_variant_b = f_p;
      o.seed = f_seed;
      o.image_prefix = f_prefix.c_str();
      o.output = f_out.c_str();
      char* s = nullptr;
      const mmvm_status st = mmvm_format_sft(&o, &s);
      summary = take_summary(st, s);
      out_root = f_out;
    } else if (name == "evaluate") {
      require(e_manifest, "manifest");
      require(e_out, "output-dir");
      if ((e_client == "replay" || e_client == "http") && e_arg.empty()) {
        throw ConfigError("--client " + e_client + " requires --client-arg");
      }
      input(e_manifest);
      if (e_client == "replay") input(e_arg);
      mmvm_evaluate_options o;
      mmvm_evaluate_options_init(&o);
      o.manifest = e_manifest.c_str();
      o.image_root = cstr(e_root);
      o.client = e_client.c_str();
      o.client_arg = cstr(e_arg);
      o.model = cstr(e_model);
      o.api_key = cstr(e_key);
      o.multi_image = e_single ? 0 : 1;
      o.concurrency = e_conc;
      o.max_attempts = e_attempts;
      o.backoff_base_ms = e_backoff;
      o.resize_long_edge = e_resize;
      o.record_latency = e_no_latency ? 0 : 1;
      o.seed = e_seed;
      o.output_dir = e_out.c_str();
      char* s = nullptr;
      const mmvm_status st = mmvm_evaluate(&o, &s);
      summary = take_summary(st, s);
      out_root = e_out;
    } else if (name == "report") {
      require(rep_manifest, "manifest");
      require(rep_out, "output");
      if (rep_logs.empty()) throw UsageError("report requires at least one --log");
      input(rep_manifest);
      std::vector<const char*> logs;
      for (const auto& l : rep_logs) {
        input(l);
        logs.push_back(l.c_str());
      }
      mmvm_report_options o;
      mmvm_report_options_init(&o);
      o.manifest = rep_manifest.c_str();
      o.logs = logs.data();
      o.log_count = logs.size();
      o.format = rep_format.c_str();
      o.output = rep_out.c_str();
      char* s = nullptr;
      const mmvm_status st = mmvm_report(&o, &s);
      summary = take_summary(st, s);
      out_root = rep_out;
    } else if (name == "selftest") {
      int passed = 0;
      char* s = nullptr;
      const mmvm_status st = mmvm_selftest(t_seed, &passed, &s);
      summary = take_summary(st, s);
      for (const auto& c : summary.at("checks")) {
        std::cout << (c.at("pass").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>() << "  "
                  << c.at("detail").get<std::string>() << "\n";
      }
      return passed ? kOk : kChecksFailed;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const CallFailed& e) {
    std::cerr << name << " failed (status " << e.status << "): " << e.message << "\n";
    return e.status == MMVM_ERR_INVALID_ARGUMENT ? kConfig : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << name << " failed: " << e.what() << "\n";
    return kRuntime;
  }

  run_path = fs::is_directory(out_root) ? out_root / "run_manifest.json"
                                        : fs::path(out_root.string() + ".run_manifest.json");
  json run{{"command", name},
           {"version", mmvm_version()},
           {"formats", json::parse(mmvm_format_versions())},
           {"config", resolved.values},
           {"config_sources", resolved.sources},
           {"inputs", inputs},
           {"outputs", hash_tree(out_root, run_path)},
           {"summary", summary}};
  std::ofstream(run_path) << run.dump(2) << "\n";
  std::cout << "resolved config:\n" << resolved.values.dump(2) << "\n" << summary.dump(2) << "\n";
  return kOk;
}
