#include <gtest/gtest.h>

#include <filesystem>

#include "json.hpp"

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/manifest.hpp"
#include "core/mask.hpp"
#include "core/raster.hpp"
#include "core/resample.hpp"
#include "core/rng.hpp"
#include "support.hpp"

using namespace mmvm;

namespace {

// Reference encoder for the compact COCO counts string (pycocotools rleToString).
std::string coco_counts_string(const std::vector<std::uint32_t>& counts) {
  std::string s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    long long x = counts[i];
    if (i > 2) x -= static_cast<long long>(counts[i - 2]);
    bool more = true;
    while (more) {
      long long c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

std::vector<std::uint32_t> column_major_counts(const Mask& m) {
  std::vector<std::uint32_t> counts;
  bool cur = false;
  std::uint32_t run = 0;
  for (int x = 0; x < m.width(); ++x) {
    for (int y = 0; y < m.height(); ++y) {
      if (m.at(x, y) != cur) {
        counts.push_back(run);
        run = 0;
        cur = !cur;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return counts;
}

}  // namespace

TEST(Rle, RoundTripRandomMasks) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const int w = 1 + static_cast<int>(rng.uniform_index(20));
    const int h = 1 + static_cast<int>(rng.uniform_index(20));
    Mask m(w, h);
    const double d = rng.uniform01();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) m.set(x, y, rng.bernoulli(d));
    const Rle r = encode_rle(m);
    std::uint64_t sum = 0;
    for (std::size_t k = 0; k < r.counts.size(); ++k) {
      if (k > 0) {
        EXPECT_GT(r.counts[k], 0u);
      }
      sum += r.counts[k];
    }
    EXPECT_EQ(sum, static_cast<std::uint64_t>(w * h));
    EXPECT_EQ(decode_rle(r), m);
  }
}

TEST(Rle, FirstRunIsZeroWhenFirstCellSet) {
  Mask m(3, 1);
  m.set(0, 0);
  EXPECT_EQ(encode_rle(m).counts, (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(Rle, RejectsBadCounts) {
  EXPECT_THROW(decode_rle({2, 2, {1, 2}}), ParseError);
  EXPECT_THROW(decode_rle({2, 2, {1, 2, 3}}), ParseError);
  EXPECT_THROW(decode_rle({2, 2, {1, 0, 3}}), ParseError);
}

TEST(Rle, ColumnMajorDecode) {
  // 2x3 (h x w) column-major: column 0 = [0,1], column 1 = [1,1], column 2 = [0,0].
  const Mask m = decode_column_major_rle({1, 3, 2}, 2, 3);
  ASSERT_EQ(m.width(), 3);
  ASSERT_EQ(m.height(), 2);
  EXPECT_FALSE(m.at(0, 0));
  EXPECT_TRUE(m.at(0, 1));
  EXPECT_TRUE(m.at(1, 0));
  EXPECT_TRUE(m.at(1, 1));
  EXPECT_FALSE(m.at(2, 0));
  EXPECT_FALSE(m.at(2, 1));
}

TEST(Rle, CocoStringMatchesReferenceEncoder) {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const Mask m = test::random_mask(rng, 1 + static_cast<int>(rng.uniform_index(40)),
                                     1 + static_cast<int>(rng.uniform_index(40)), rng.uniform01());
    const auto counts = column_major_counts(m);
    EXPECT_EQ(decode_coco_counts_string(coco_counts_string(counts)), counts);
    EXPECT_EQ(decode_column_major_rle(counts, m.height(), m.width()), m);
  }
}

TEST(Labels, BijectiveBase26) {
  EXPECT_EQ(option_label(0), "A");
  EXPECT_EQ(option_label(25), "Z");
  EXPECT_EQ(option_label(26), "AA");
  EXPECT_EQ(option_label(27), "AB");
  for (std::size_t i = 0; i < 2000; ++i) EXPECT_EQ(option_index(option_label(i)), i);
  EXPECT_FALSE(option_index("a").has_value());
  EXPECT_FALSE(option_index("").has_value());
}

TEST(Types, MatchTypeRoundTrip) {
  for (MatchType t : kBenchmarkMatchTypes) EXPECT_EQ(parse_match_type(to_string(t)), t);
  EXPECT_FALSE(parse_match_type("XX").has_value());
}

TEST(Rng, DeterministicAndSeedSensitive) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(Rng(42).next(), Rng(43).next());
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
}

TEST(Manifest, SmallManifestIsValid) {
  const auto m = test::small_manifest(4, 2);
  EXPECT_TRUE(validate_manifest(m).empty());
}

TEST(Manifest, AnswerNotInOptions) {
  auto m = test::small_manifest();
  m.questions[0].answer = "E";
  const auto v = validate_manifest(m);
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.rule == "question.answer_not_in_options"; }));
}

TEST(Manifest, DanglingImage) {
  auto m = test::small_manifest();
  m.questions[0].image_ids[1] = "nope";
  const auto v = validate_manifest(m);
  EXPECT_TRUE(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.rule == "question.dangling_image"; }));
}

TEST(Manifest, WrongAnswerTrackIsFlagged) {
  auto m = test::small_manifest(4, 0);
  m.questions[0].answer = "B";
  const auto v = validate_manifest(m);
  EXPECT_TRUE(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.rule == "question.correct_option"; }));
}

TEST(Manifest, CanonicalRoundTrip) {
  auto m = test::small_manifest(3, 1);
  m.questions[0].reason = "same shape";
  m.questions[0].question_text = "custom?";
  const std::string s = serialize_manifest(m);
  const auto back = parse_manifest(s);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize_manifest(back), s);
  EXPECT_EQ(manifest_hash(back), manifest_hash(m));
}

TEST(Manifest, KeyOrderIsCanonicalized) {
  const std::string s = serialize_manifest(test::small_manifest());
  // Reverse the key order of every record; the canonical form must come back.
  std::string reordered;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto nl = s.find('\n', pos);
    auto j = nlohmann::json::parse(s.substr(pos, nl - pos));
    std::string line = "{";
    std::vector<std::string> keys;
    for (auto& [k, _] : j.items()) keys.push_back(k);
    std::reverse(keys.begin(), keys.end());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (i) line += ", ";
      line += nlohmann::json(keys[i]).dump() + ": " + j[keys[i]].dump();
    }
    reordered += line + "}\n";
    pos = nl + 1;
  }
  ASSERT_NE(reordered, s);
  EXPECT_EQ(serialize_manifest(parse_manifest(reordered)), s);
}

TEST(Manifest, ParseErrors) {
  EXPECT_THROW(parse_manifest(""), ParseError);
  EXPECT_THROW(parse_manifest("not json\n"), ParseError);
  const std::string s = serialize_manifest(test::small_manifest());
  const std::string body = s.substr(s.find('\n') + 1);
  EXPECT_THROW(parse_manifest(body), ParseError);  // no header
  std::string bad = s;
  bad.replace(bad.find("\"mmvm-manifest\""), 15, "\"other-format!\"");
  EXPECT_THROW(parse_manifest(bad), ParseError);
}

TEST(Manifest, SaveLoad) {
  const auto dir = std::filesystem::temp_directory_path() / "mmvm_test_core";
  std::filesystem::create_directories(dir);
  const auto m = test::small_manifest();
  save_manifest(m, dir / "m.jsonl");
  EXPECT_EQ(load_manifest(dir / "m.jsonl"), m);
  EXPECT_THROW(load_manifest(dir / "missing.jsonl"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Resample, RotateQuarterMatchesTransposeThenReverse) {
  Rng rng(3);
  const Mask m = test::random_mask(rng, 3, 5, 0.5);
  // Clockwise: transpose, then reverse every row.
  Mask expect(5, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) expect.set(x, y, m.at(y, 5 - 1 - x));
  EXPECT_EQ(rotate_quarter(m, 1), expect);
  EXPECT_EQ(rotate_quarter(rotate_quarter(m, 1), 3), m);
  EXPECT_EQ(rotate_quarter(m, 2), flip_horizontal(rotate_quarter(rotate_quarter(flip_horizontal(m), 1), 1)));
  const Image img = test::random_image(rng, 3, 5);
  const Image r = rotate_quarter(img, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_EQ(r.at(x, y), img.at(y, 4 - x));
}

TEST(Resample, FlipCropResize) {
  Rng rng(4);
  const Image img = test::random_image(rng, 7, 4);
  const Image f = flip_horizontal(img);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 7; ++x) EXPECT_EQ(f.at(x, y), img.at(6 - x, y));
  const Image c = crop(img, 2, 1, 3, 2);
  EXPECT_EQ(c.at(0, 0), img.at(2, 1));
  EXPECT_EQ(c.at(2, 1), img.at(4, 2));
  EXPECT_EQ(resize_bilinear(img, 7, 4), img);
  const Mask m = test::random_mask(rng, 6, 6, 0.4);
  const Mask up = resize_nearest(m, 12, 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) EXPECT_EQ(up.at(x, y), m.at(x / 2, y / 2));
  const Image uniform(5, 3, {10, 20, 30});
  const Image big = resize_bilinear(uniform, 11, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 11; ++x) EXPECT_EQ(big.at(x, y), (Rgb{10, 20, 30}));
}

TEST(Resample, LongEdgePad) {
  const Image img(20, 10, {200, 0, 0});
  const Image out = resize_long_edge_and_pad(img, 8);
  EXPECT_EQ(out.width(), 8);
  EXPECT_EQ(out.height(), 8);
  EXPECT_EQ(out.at(0, 0), (Rgb{200, 0, 0}));
  EXPECT_EQ(out.at(7, 7), kBlack);
}

TEST(Raster, PngRoundTrip) {
  Rng rng(8);
  const Image img = test::random_image(rng, 13, 9);
  EXPECT_EQ(decode_png(encode_png(img)), img);
  EXPECT_THROW(decode_png("garbage"), ParseError);
}

TEST(Hash, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex(std::string_view("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(std::string_view("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
