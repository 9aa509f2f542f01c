#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "core/error.hpp"
#include "core/raster.hpp"
#include "eval/extract.hpp"
#include "eval/harness.hpp"
#include "support.hpp"

using namespace mmvm;
using namespace mmvm::eval;

namespace {

std::vector<std::string> labels_of(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(option_label(i));
  return out;
}

std::vector<std::string> object_texts(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("object-" + std::to_string(i + 1));
  return out;
}

// Log answering the first `correct` questions right and the rest wrong.
PredictionLog log_with(const DatasetManifest& m, std::size_t correct) {
  PredictionLog log{"m", manifest_hash(m), {}};
  for (std::size_t i = 0; i < m.questions.size(); ++i) {
    const auto& q = m.questions[i];
    const std::string wrong = q.answer == "A" ? "B" : "A";
    const std::string pick = i < correct ? q.answer : wrong;
    log.entries.push_back({q.id, "Answer: " + pick, pick, 0, 1, std::nullopt});
  }
  return log;
}

std::vector<std::string> table_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  std::getline(ss, cell, '|');
  while (std::getline(ss, cell, '|')) {
    const auto b = cell.find_first_not_of(" \n");
    const auto e = cell.find_last_not_of(" \n");
    if (b != std::string::npos) cells.push_back(cell.substr(b, e - b + 1));
  }
  return cells;
}

EvalReport report_from_row(const std::vector<std::string>& row) {
  EvalReport r;
  r.model = row[0];
  r.overall_hundredths = parse_hundredths(row[1]);
  for (std::size_t k = 0; k < kBenchmarkMatchTypes.size(); ++k) {
    r.per_type.push_back({kBenchmarkMatchTypes[k], 100, 0, parse_hundredths(row[k + 2])});
  }
  return r;
}

class FlakyClient final : public ModelClient {
 public:
  FlakyClient(int failures_before_success) : fail_(failures_before_success) {}
  std::string name() const override { return "flaky"; }
  bool supports_multi_image() const override { return true; }
  std::string answer(const ModelQuery& q) override {
    if (calls[q.question_id]++ < fail_) throw TransportError("503");
    return "Answer: A";
  }
  std::map<std::string, int> calls;

 private:
  int fail_;
};

class CaptureClient final : public ModelClient {
 public:
  std::string name() const override { return "capture"; }
  bool supports_multi_image() const override { return false; }
  std::string answer(const ModelQuery& q) override {
    count = q.images.size();
    if (!q.images.empty()) height = q.images[0].height();
    prompt = q.prompt;
    return "A";
  }
  std::size_t count = 0;
  int height = 0;
  std::string prompt;
};

class SlowClient final : public ModelClient {
 public:
  std::string name() const override { return "slow"; }
  bool supports_multi_image() const override { return true; }
  std::string answer(const ModelQuery& q) override {
    const int n = std::stoi(q.question_id.substr(1));
    std::this_thread::sleep_for(std::chrono::milliseconds((n * 7) % 5));
    return q.question_id;
  }
};

}  // namespace

TEST(Extract, Examples) {
  const auto L = labels_of(4);
  EXPECT_EQ(extract_choice("The answer is B.", L), "B");
  EXPECT_EQ(extract_choice("Both A and C look right", L), std::nullopt);
  EXPECT_EQ(extract_choice("Answer: C, though A was close", L), "C");
  EXPECT_EQ(extract_choice("nothing here", L), std::nullopt);
}

TEST(Extract, HandLabeledFixture) {
  std::ifstream in(std::string(MMVM_TEST_ASSETS) + "/extract_fixture.jsonl");
  ASSERT_TRUE(in);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto k = j.at("options").get<std::size_t>();
    const auto got = extract_choice(j.at("response").get<std::string>(), labels_of(k), object_texts(k));
    const std::optional<std::string> want =
        j.at("expected").is_null() ? std::nullopt : std::optional(j.at("expected").get<std::string>());
    EXPECT_EQ(got, want) << j.at("response");
    ++n;
  }
  EXPECT_EQ(n, 50);
}

TEST(Score, Arithmetic) {
  EXPECT_EQ(percent_hundredths(5, 10), 5000);
  EXPECT_EQ(percent_hundredths(644, 1510), 4265);
  EXPECT_EQ(percent_hundredths(575, 1510), 3808);
  EXPECT_EQ(percent_hundredths(1, 8), 1250);
  EXPECT_EQ(percent_hundredths(1, 3), 3333);
  EXPECT_EQ(percent_hundredths(2, 3), 6667);
  // 1/16 = 6.25% exactly; 1/32 = 3.125% rounds half up.
  EXPECT_EQ(percent_hundredths(1, 32), 313);
  EXPECT_EQ(percent_hundredths(0, 0), 0);
  EXPECT_EQ(format_hundredths(4265), "42.65");
  EXPECT_EQ(format_hundredths(5), "0.05");
  EXPECT_EQ(format_hundredths(10000), "100.00");
  EXPECT_EQ(parse_hundredths("38.08"), 3808);
  EXPECT_EQ(parse_hundredths("100.00"), 10000);
}

TEST(Score, TenQuestionsHalfRight) {
  const auto m = test::text_manifest(10);
  const auto r = score(m, log_with(m, 5));
  EXPECT_EQ(format_hundredths(r.overall_hundredths), "50.00");
  EXPECT_EQ(r.total, 10u);
  EXPECT_EQ(r.correct, 5u);
}

TEST(Score, BenchmarkSizedTotals) {
  const auto m = test::text_manifest(1510);
  EXPECT_EQ(format_hundredths(score(m, log_with(m, 644)).overall_hundredths), "42.65");
  EXPECT_EQ(format_hundredths(score(m, log_with(m, 575)).overall_hundredths), "38.08");
}

TEST(Score, OverlappingTagsMatchRecount) {
  auto m = test::text_manifest(40);
  Rng rng(3);
  for (auto& q : m.questions) {
    q.match_types.clear();
    for (MatchType t : kBenchmarkMatchTypes)
      if (rng.bernoulli(0.3)) q.match_types.push_back(t);
    if (q.match_types.empty()) q.match_types.push_back(MatchType::OM);
  }
  PredictionLog log = log_with(m, 0);
  for (auto& e : log.entries)
    if (rng.bernoulli(0.5)) {
      const auto& q = *std::find_if(m.questions.begin(), m.questions.end(), [&](auto& x) { return x.id == e.question_id; });
      e.extracted = q.answer;
    }
  const auto r = score(m, log);
  std::map<MatchType, std::pair<int, int>> recount;
  int total_correct = 0;
  for (std::size_t i = 0; i < m.questions.size(); ++i) {
    const bool ok = log.entries[i].extracted == m.questions[i].answer;
    total_correct += ok;
    for (MatchType t : m.questions[i].match_types) {
      recount[t].first += 1;
      recount[t].second += ok;
    }
  }
  EXPECT_EQ(r.correct, static_cast<std::size_t>(total_correct));
  std::int64_t sum = 0;
  for (const auto& [t, nc] : recount) {
    const TypeScore* s = r.find(t);
    ASSERT_NE(s, nullptr);
    EXPECT_EQ(s->n, static_cast<std::size_t>(nc.first));
    EXPECT_EQ(s->correct, static_cast<std::size_t>(nc.second));
    // Half-up rounding done independently in floating point with a guard.
    const double pct = 100.0 * nc.second / nc.first;
    EXPECT_EQ(s->hundredths, static_cast<std::int64_t>(std::floor(pct * 100 + 0.5 + 1e-9)));
    sum += s->hundredths;
  }
  EXPECT_NE(r.overall_hundredths * static_cast<std::int64_t>(recount.size()), sum);
  EXPECT_EQ(score(m, log), r);
}

TEST(Score, MissingExtraAndDuplicateIds) {
  const auto m = test::text_manifest(4);
  auto log = log_with(m, 2);
  log.entries.pop_back();
  try {
    score(m, log);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("q3"), std::string::npos);
  }
  log = log_with(m, 2);
  log.entries.push_back({"zzz", "", std::nullopt, 0, 1, std::nullopt});
  EXPECT_THROW(score(m, log), InvalidArgument);
  log = log_with(m, 2);
  log.entries.push_back(log.entries[0]);
  EXPECT_THROW(score(m, log), InvalidArgument);
}

TEST(Score, PermutationAndOrderInvariance) {
  const auto m = test::text_manifest(30, 5);
  Rng rng(4);
  PredictionLog log{"m", "", {}};
  for (const auto& q : m.questions) {
    const std::string pick = option_label(rng.uniform_index(5));
    log.entries.push_back({q.id, pick, rng.bernoulli(0.1) ? std::nullopt : std::optional(pick), 0, 1, std::nullopt});
  }
  const auto base = score(m, log);

  // Relabel options with one permutation, mapping the answer and responses along.
  std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  auto pm = m;
  auto plog = log;
  auto map = [&](const std::string& l) { return option_label(perm[*option_index(l)]); };
  for (std::size_t i = 0; i < pm.questions.size(); ++i) {
    auto& q = pm.questions[i];
    std::vector<AnswerOption> opts(q.options.size());
    for (std::size_t k = 0; k < q.options.size(); ++k) opts[perm[k]] = {option_label(perm[k]), q.options[k].referral};
    q.options = opts;
    q.answer = map(q.answer);
    if (plog.entries[i].extracted) plog.entries[i].extracted = map(*plog.entries[i].extracted);
  }
  const auto permuted = score(pm, plog);
  EXPECT_EQ(permuted.overall_hundredths, base.overall_hundredths);
  EXPECT_EQ(permuted.per_type, base.per_type);

  auto rm = m;
  auto rlog = log;
  std::reverse(rm.questions.begin(), rm.questions.end());
  std::reverse(rlog.entries.begin(), rlog.entries.end());
  EXPECT_EQ(score(rm, rlog).overall_hundredths, base.overall_hundredths);
}

TEST(Score, UnansweredNeverHelps) {
  const auto m = test::text_manifest(20);
  auto log = log_with(m, 12);
  const auto before = score(m, log);
  log.entries[3].extracted.reset();
  log.entries[15].extracted.reset();
  const auto after = score(m, log);
  EXPECT_LE(after.overall_hundredths, before.overall_hundredths);
  EXPECT_EQ(after.unanswered, 2u);
}

TEST(RunEval, OracleScoresFull) {
  const auto m = test::text_manifest(50);
  OracleClient oracle(m);
  const auto log = run_eval(m, oracle, {});
  EXPECT_EQ(format_hundredths(score(m, log).overall_hundredths), "100.00");
  EXPECT_EQ(log.manifest_hash, manifest_hash(m));
}

TEST(RunEval, RandomClientNearChance) {
  const auto m = test::text_manifest(1000, 4);
  RandomClient rnd(2024);
  const auto r = score(m, run_eval(m, rnd, {}));
  EXPECT_GE(r.overall_hundredths, 2200);
  EXPECT_LE(r.overall_hundredths, 2800);
}

TEST(RunEval, SingleImageClientGetsOneStackedRaster) {
  const auto m = test::small_manifest(4, 0);
  CaptureClient cap;
  const RasterLoader loader = [](const ImageRef& r) { return Image(r.width, r.height, {60, 60, 60}); };
  run_eval(m, cap, loader);
  EXPECT_EQ(cap.count, 1u);
  EXPECT_EQ(cap.height, 64);
  EXPECT_EQ(cap.prompt, eval_prompt(m.questions[0]));
  EXPECT_NE(cap.prompt.find("A. object-1"), std::string::npos);
}

TEST(RunEval, RetriesAreBoundedAndRecorded) {
  const auto m = test::text_manifest(3);
  EvalConfig cfg;
  cfg.backoff_base_ms = 0;
  FlakyClient two(2);
  auto log = run_eval(m, two, {}, cfg);
  for (const auto& e : log.entries) {
    EXPECT_EQ(e.attempts, 3);
    EXPECT_EQ(e.extracted, "A");
    EXPECT_FALSE(e.error.has_value());
  }
  FlakyClient dead(100);
  log = run_eval(m, dead, {}, cfg);
  for (const auto& e : log.entries) {
    EXPECT_EQ(e.attempts, 3);
    EXPECT_FALSE(e.extracted.has_value());
    EXPECT_TRUE(e.error.has_value());
  }
  EXPECT_EQ(score(m, log).correct, 0u);
}

TEST(RunEval, ConcurrencyKeepsManifestOrder) {
  const auto m = test::text_manifest(40);
  SlowClient slow;
  EvalConfig cfg;
  cfg.concurrency = 4;
  const auto log = run_eval(m, slow, {}, cfg);
  ASSERT_EQ(log.entries.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(log.entries[i].question_id, m.questions[i].id);
    EXPECT_EQ(log.entries[i].raw_text, m.questions[i].id);
  }
}

TEST(Log, RoundTripAndReplay) {
  const auto m = test::text_manifest(12);
  RandomClient rnd(5);
  EvalConfig cfg;
  cfg.record_latency = false;
  const auto log = run_eval(m, rnd, {}, cfg);
  const std::string text = serialize_log(log);
  EXPECT_EQ(serialize_log(parse_log(text)), text);
  EXPECT_EQ(serialize_log(run_eval(m, rnd, {}, cfg)), text);
  const auto header = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(header.at("kind"), "header");
  EXPECT_EQ(header.at("extractor"), "extract.v1");
  std::string replay;
  for (const auto& e : log.entries) replay += nlohmann::json{{"question_id", e.question_id}, {"response", e.raw_text}}.dump() + "\n";
  ReplayClient rc("replayed", replay);
  EXPECT_EQ(score(m, run_eval(m, rc, {})).overall_hundredths, score(m, log).overall_hundredths);
  EXPECT_THROW(parse_log("{\"kind\":\"entry\"}\n"), ParseError);
}

TEST(Report, TableLayoutWithLeaderboardRows) {
  const std::vector<std::vector<std::string>> rows = {
      {"GPT4o-20240806", "42.65", "39.28", "65.52", "60.75", "67.53", "32.28", "44.00", "43.18", "50.00"},
      {"Qwen2-VL-72B-Instruct", "38.08", "37.64", "44.83", "42.06", "64.94", "32.28", "36.00", "35.80", "39.81"},
      {"CoLVA-Qwen2VL-7B", "51.06", "42.72", "37.93", "49.53", "80.52", "46.43", "52.80", "47.73", "49.54"}};
  std::vector<EvalReport> reports;
  for (const auto& r : rows) reports.push_back(report_from_row(r));
  const std::string table = emit_report(reports, ReportFormat::Table);
  std::vector<std::string> lines;
  std::stringstream ss(table);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(table_cells(lines[0]),
            (std::vector<std::string>{"Model", "Overall", "CL", "SP", "TM", "SZ", "RP", "OO", "BR", "OM"}));
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(table_cells(lines[i + 2]), rows[i]);

  const auto single = emit_report({reports[0]}, ReportFormat::Table);
  const auto row_start = single.find('\n', single.find('\n') + 1) + 1;
  EXPECT_EQ(table_cells(single.substr(row_start)).size(), 10u);
}

TEST(Report, CsvRoundTrip) {
  const auto m = test::text_manifest(37);
  auto r1 = score(m, log_with(m, 20));
  r1.model = "first, with comma";
  auto r2 = score(m, log_with(m, 9));
  r2.model = "second";
  const std::vector<EvalReport> in{r1, r2};
  const std::string csv = emit_report(in, ReportFormat::Csv);
  EXPECT_EQ(parse_report_csv(csv), in);
}

TEST(Report, PlotIsBytesStablePng) {
  const auto m = test::text_manifest(16);
  const std::vector<EvalReport> in{score(m, log_with(m, 7)), score(m, log_with(m, 12))};
  const std::string a = emit_report(in, ReportFormat::Plot);
  EXPECT_EQ(a, emit_report(in, ReportFormat::Plot));
  const Image img = decode_png(a);
  EXPECT_GT(img.width(), 0);
  EXPECT_FALSE(parse_report_format("pdf").has_value());
  EXPECT_THROW(emit_report({}, ReportFormat::Table), InvalidArgument);
}
