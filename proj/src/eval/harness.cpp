#include "eval/harness.hpp"

#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/json_util.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "eval/extract.hpp"
#include "json.hpp"
#include "render/font.hpp"
#include "render/prompt_render.hpp"
#include "sft/format.hpp"

namespace mmvm::eval {

using nlohmann::json;
using namespace json_util;

OracleClient::OracleClient(const DatasetManifest& manifest) {
  for (const auto& q : manifest.questions) answers_[q.id] = q.answer;
}

std::string OracleClient::answer(const ModelQuery& query) {
  const auto it = answers_.find(query.question_id);
  if (it == answers_.end()) throw TransportError("oracle has no answer for " + query.question_id);
  return "Answer: " + it->second;
}

std::string RandomClient::answer(const ModelQuery& query) {
  if (query.labels.empty()) throw InvalidArgument("question has no labels");
  Rng rng(derive_seed(seed_, query.question_id));
  return "Answer: " + query.labels[rng.uniform_index(query.labels.size())];
}

ReplayClient::ReplayClient(std::string name, const std::string& jsonl) : name_(std::move(name)) {
  std::istringstream in(jsonl);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      expect_keys(j, {"question_id", "response"}, {}, "replay record");
      responses_[get_string(j, "question_id")] = get_string(j, "response");
    } catch (const json::exception& e) {
      throw ParseError("replay line " + std::to_string(n) + ": " + e.what());
    }
  }
}

ReplayClient ReplayClient::from_file(const std::filesystem::path& path) {
  return ReplayClient(path.stem().string(), read_file(path));
}

std::string ReplayClient::answer(const ModelQuery& query) {
  const auto it = responses_.find(query.question_id);
  if (it == responses_.end()) throw TransportError("no recorded response for " + query.question_id);
  return it->second;
}

std::string HttpModelClient::answer(const ModelQuery& query) {
  return chat_complete(endpoint_, query.prompt, query.images);
}

std::string eval_prompt(const MatchingQuestion& q) {
  return std::string(sft::system_text()) + "\n" + sft::question_block(q) +
         "\nAnswer with the option's letter from the given choices directly.";
}

namespace {

std::vector<std::string> labels_of(const MatchingQuestion& q) {
  std::vector<std::string> out;
  for (const auto& o : q.options) out.push_back(o.label);
  return out;
}

std::vector<std::string> texts_of(const MatchingQuestion& q) {
  std::vector<std::string> out;
  for (const auto& o : q.options) out.push_back(option_display_text(o));
  return out;
}

}  // namespace

PredictionLog run_eval(const DatasetManifest& manifest, ModelClient& client, const RasterLoader& loader,
                       const EvalConfig& config) {
  if (config.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
  PredictionLog log;
  log.model = client.name();
  log.manifest_hash = manifest_hash(manifest);
  log.entries.resize(manifest.questions.size());
  parallel_for(manifest.questions.size(), config.concurrency, [&](std::size_t i) {
    const MatchingQuestion& q = manifest.questions[i];
    PredictionEntry& e = log.entries[i];
    e.question_id = q.id;
    std::vector<Image> images;
    if (loader) {
      images = render::render_question(manifest, q, loader, {config.resize_long_edge});
      if (!client.supports_multi_image() && images.size() > 1) {
        images = {render::concat_vertical(images)};
      }
    }
    const ModelQuery query{q.id, eval_prompt(q), images, labels_of(q)};
    const auto start = std::chrono::steady_clock::now();
    for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
      e.attempts = attempt;
      try {
        e.raw_text = client.answer(query);
        e.error.reset();
        break;
      } catch (const TransportError& err) {
        e.error = std::string("transport: ") + err.what();
      } catch (const ParseError& err) {
        e.error = std::string("parse: ") + err.what();
        break;
      }
      if (attempt < config.max_attempts && config.backoff_base_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config.backoff_base_ms << (attempt - 1)));
      }
    }
    if (config.record_latency) {
      e.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    if (!e.error) e.extracted = extract_choice(e.raw_text, query.labels, texts_of(q));
  });
  return log;
}

std::string serialize_log(const PredictionLog& log) {
  std::string out = json{{"kind", "header"},
                         {"format", "mmvm-predictions"},
                         {"version", "1"},
                         {"extractor", kExtractorVersion},
                         {"model", log.model},
                         {"manifest_hash", log.manifest_hash}}
                        .dump() +
                    "\n";
  for (const auto& e : log.entries) {
    json j{{"kind", "prediction"},
           {"question_id", e.question_id},
           {"raw_text", e.raw_text},
           {"extracted", e.extracted ? json(*e.extracted) : json(nullptr)},
           {"latency_ms", e.latency_ms},
           {"attempts", e.attempts}};
    if (e.error) j["error"] = *e.error;
    out += j.dump() + "\n";
  }
  return out;
}

PredictionLog parse_log(std::string_view jsonl) {
  PredictionLog log;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string kind = get_string(j, "kind");
      if (!header) {
        if (kind != "header") throw ParseError("first record must be the header");
        expect_keys(j, {"kind", "format", "version", "model", "manifest_hash"}, {"extractor"}, "log header");
        if (get_string(j, "format") != "mmvm-predictions" || get_string(j, "version") != "1") {
          throw ParseError("unsupported prediction log format");
        }
        log.model = get_string(j, "model");
        log.manifest_hash = get_string(j, "manifest_hash");
        header = true;
        continue;
      }
      if (kind != "prediction") throw ParseError("unexpected record kind '" + kind + "'");
      expect_keys(j, {"kind", "question_id", "raw_text", "extracted"}, {"latency_ms", "attempts", "error"},
                  "prediction");
      PredictionEntry e;
      e.question_id = get_string(j, "question_id");
      e.raw_text = get_string(j, "raw_text");
      if (!j.at("extracted").is_null()) e.extracted = as_string(j.at("extracted"), "extracted");
      if (j.contains("latency_ms")) e.latency_ms = as_double(j.at("latency_ms"), "latency_ms");
      if (j.contains("attempts")) e.attempts = as_int(j.at("attempts"), "attempts");
      if (j.contains("error")) e.error = as_string(j.at("error"), "error");
      log.entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw ParseError("prediction log line " + std::to_string(n) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("prediction log line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (!header) throw ParseError("prediction log has no header");
  return log;
}

PredictionLog load_log(const std::filesystem::path& path) { return parse_log(read_file(path)); }

std::int64_t percent_hundredths(std::size_t correct, std::size_t total) {
  if (total == 0) return 0;
  const auto c = static_cast<std::int64_t>(correct);
  const auto t = static_cast<std::int64_t>(total);
  return (2 * c * 10000 + t) / (2 * t);
}

std::string format_hundredths(std::int64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", h < 0 ? "-" : "", static_cast<long long>(std::llabs(h) / 100),
                static_cast<long long>(std::llabs(h) % 100));
  return buf;
}

std::int64_t parse_hundredths(std::string_view s) {
  const std::string str(s);
  const auto dot = str.find('.');
  try {
    std::size_t used = 0;
    const std::string whole = str.substr(0, dot);
    const long long w = std::stoll(whole, &used);
    if (used != whole.size()) throw ParseError("bad percentage '" + str + "'");
    long long frac = 0;
    if (dot != std::string::npos) {
      std::string f = str.substr(dot + 1);
      if (f.empty() || f.size() > 2 || !std::all_of(f.begin(), f.end(), ::isdigit)) {
        throw ParseError("bad percentage '" + str + "'");
      }
      if (f.size() == 1) f += "0";
      frac = std::stoll(f);
    }
    return w * 100 + frac;
  } catch (const std::logic_error&) {
    throw ParseError("bad percentage '" + str + "'");
  }
}

const TypeScore* EvalReport::find(MatchType t) const noexcept {
  for (const auto& s : per_type) {
    if (s.type == t) return &s;
  }
  return nullptr;
}

EvalReport score(const DatasetManifest& manifest, const PredictionLog& log) {
  std::map<std::string, const PredictionEntry*> by_id;
  std::vector<std::string> duplicate, unknown, missing;
  std::set<std::string> known;
  for (const auto& q : manifest.questions) known.insert(q.id);
  for (const auto& e : log.entries) {
    if (!known.contains(e.question_id)) unknown.push_back(e.question_id);
    if (!by_id.emplace(e.question_id, &e).second) duplicate.push_back(e.question_id);
  }
  for (const auto& q : manifest.questions) {
    if (!by_id.contains(q.id)) missing.push_back(q.id);
  }
  if (!missing.empty() || !unknown.empty() || !duplicate.empty()) {
    std::string msg = "prediction log does not match manifest";
    auto list = [&](const char* what, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string("; ") + what + ":";
      for (const auto& id : ids) msg += " " + id;
    };
    list("missing", missing);
    list("unknown", unknown);
    list("duplicate", duplicate);
    throw InvalidArgument(msg);
  }
  EvalReport r;
  r.model = log.model;
  r.manifest_hash = manifest_hash(manifest);
  std::map<MatchType, TypeScore> types;
  for (const auto& q : manifest.questions) {
    const PredictionEntry& e = *by_id.at(q.id);
    const bool ok = e.extracted && *e.extracted == q.answer;
    ++r.total;
    if (ok) ++r.correct;
    if (!e.extracted) ++r.unanswered;
    for (MatchType t : q.match_types) {
      TypeScore& s = types.try_emplace(t, TypeScore{t}).first->second;
      ++s.n;
      if (ok) ++s.correct;
    }
  }
  r.overall_hundredths = percent_hundredths(r.correct, r.total);
  for (auto& [t, s] : types) {
    s.hundredths = percent_hundredths(s.correct, s.n);
    r.per_type.push_back(s);
  }
  return r;
}

std::optional<ReportFormat> parse_report_format(std::string_view s) noexcept {
  if (s == "table") return ReportFormat::Table;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "plot") return ReportFormat::Plot;
  return std::nullopt;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote in report csv");
  return out;
}

std::string table(const std::vector<EvalReport>& reports) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head = {"Model", "Overall"};
  for (MatchType t : kBenchmarkMatchTypes) head.emplace_back(to_string(t));
  rows.push_back(head);
  for (const auto& r : reports) {
    std::vector<std::string> row = {r.model, format_hundredths(r.overall_hundredths)};
    for (MatchType t : kBenchmarkMatchTypes) {
      const TypeScore* s = r.find(t);
      row.push_back(s ? format_hundredths(s->hundredths) : "-");
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    out += "|";
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += " " + row[c] + std::string(width[c] - row[c].size(), ' ') + " |";
    }
    out += "\n";
  };
  emit(rows[0]);
  out += "|";
  for (std::size_t w : width) out += std::string(w + 2, '-') + "|";
  out += "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) emit(rows[i]);
  return out;
}

std::string csv(const std::vector<EvalReport>& reports) {
  std::string out = "model,manifest_hash,total,correct,unanswered,overall";
  for (MatchType t : kBenchmarkMatchTypes) {
    const std::string c(to_string(t));
    out += "," + c + "," + c + "_n," + c + "_correct";
  }
  out += "\n";
  for (const auto& r : reports) {
    out += csv_field(r.model) + "," + r.manifest_hash + "," + std::to_string(r.total) + "," +
           std::to_string(r.correct) + "," + std::to_string(r.unanswered) + "," + format_hundredths(r.overall_hundredths);
    for (MatchType t : kBenchmarkMatchTypes) {
      const TypeScore* s = r.find(t);
      if (s) {
        out += "," + format_hundredths(s->hundredths) + "," + std::to_string(s->n) + "," + std::to_string(s->correct);
      } else {
        out += ",,,";
      }
    }
    out += "\n";
  }
  return out;
}

// One panel per model: bars for overall and each type on a 0-100 scale.
std::string plot(const std::vector<EvalReport>& reports) {
  constexpr int kBar = 26, kGap = 10, kScale = 2, kTop = 34, kBottom = 16, kMargin = 12;
  constexpr int kBars = 9;
  const int panel_h = kTop + 100 * kScale + kBottom;
  const int width = 2 * kMargin + kBars * kBar + (kBars - 1) * kGap;
  Image img(width, panel_h * static_cast<int>(reports.size()), kWhite);
  const auto palette = render::default_palette(kBars);
  const Rgb ink{40, 40, 40};
  for (std::size_t m = 0; m < reports.size(); ++m) {
    const EvalReport& r = reports[m];
    const int y0 = static_cast<int>(m) * panel_h;
    render::draw_text(img, kMargin, y0 + 4, r.model, ink);
    const int base_y = y0 + kTop + 100 * kScale;
    for (int x = kMargin; x < width - kMargin; ++x) img.set(x, base_y, ink);
    for (int b = 0; b < kBars; ++b) {
      std::optional<std::int64_t> h;
      std::string label = "OA";
      if (b == 0) {
        h = r.overall_hundredths;
      } else {
        const MatchType t = kBenchmarkMatchTypes[static_cast<std::size_t>(b - 1)];
        label = std::string(to_string(t));
        if (const TypeScore* s = r.find(t)) h = s->hundredths;
      }
      const int x0 = kMargin + b * (kBar + kGap);
      render::draw_text(img, x0 + (kBar - render::text_width(label)) / 2, base_y + 4, label, ink);
      if (!h) continue;
      const int bar_h = static_cast<int>(std::clamp<std::int64_t>(*h, 0, 10000) * kScale / 100);
      for (int y = base_y - bar_h; y < base_y; ++y) {
        for (int x = x0; x < x0 + kBar; ++x) img.set(x, y, palette[static_cast<std::size_t>(b)]);
      }
      const std::string value = format_hundredths(*h);
      const int tw = render::text_width(value);
      render::draw_text(img, x0 + (kBar - tw) / 2, base_y - bar_h - render::text_height() - 2, value, ink);
    }
  }
  return encode_png(img);
}

}  // namespace

std::string emit_report(const std::vector<EvalReport>& reports, ReportFormat format) {
  if (reports.empty()) throw InvalidArgument("no reports to emit");
  switch (format) {
    case ReportFormat::Table: return table(reports);
    case ReportFormat::Csv: return csv(reports);
    case ReportFormat::Plot: return plot(reports);
  }
  throw InvalidArgument("unknown report format");
}

std::vector<EvalReport> parse_report_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty report csv");
  const std::size_t columns = 6 + 3 * kBenchmarkMatchTypes.size();
  if (csv_split(line).size() != columns) throw ParseError("report csv header has wrong column count");
  std::vector<EvalReport> out;
  auto count = [](const std::string& s) -> std::size_t {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(s, &used);
      if (used != s.size()) throw ParseError("bad count '" + s + "'");
      return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      throw ParseError("bad count '" + s + "'");
    }
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != columns) throw ParseError("report csv row has wrong column count");
    EvalReport r;
    r.model = f[0];
    r.manifest_hash = f[1];
    r.total = count(f[2]);
    r.correct = count(f[3]);
    r.unanswered = count(f[4]);
    r.overall_hundredths = parse_hundredths(f[5]);
    for (std::size_t k = 0; k < kBenchmarkMatchTypes.size(); ++k) {
      const std::size_t c = 6 + 3 * k;
      if (f[c].empty()) continue;
      r.per_type.push_back({kBenchmarkMatchTypes[k], count(f[c + 1]), count(f[c + 2]), parse_hundredths(f[c])});
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mmvm::eval
