#include <gtest/gtest.h>

#include <set>

#include "core/error.hpp"
#include "pseudo/augment.hpp"
#include "support.hpp"

using namespace mmvm;
using namespace mmvm::pseudo;

namespace {

AugmentationConfig identity_config() {
  AugmentationConfig c;
  c.crop_scale_lo = 1.0;
  c.crop_scale_hi = 1.0;
  c.hflip_prob = 0.0;
  c.rotation_degrees = {0};
  c.visibility_threshold = 1;
  return c;
}

std::vector<SegmentedObject> grid_objects(int w, int h) {
  std::vector<SegmentedObject> objs;
  int k = 0;
  for (int y = 0; y + 10 <= h; y += 12)
    for (int x = 0; x + 10 <= w; x += 12) {
      objs.push_back({"o" + std::to_string(k++), "src", test::rect_mask(w, h, x, y, x + 10, y + 10), std::nullopt});
    }
  return objs;
}

}  // namespace

TEST(Augment, IdentityConfigIsIdentity) {
  Rng rng(1);
  const Image img = test::random_image(rng, 40, 30);
  const auto objs = grid_objects(40, 30);
  auto cfg = identity_config();
  cfg.seed = 5;
  const auto p = simulate_pair(img, objs, cfg, "x");
  EXPECT_EQ(p.view_a.image, img);
  EXPECT_EQ(p.view_b.image, img);
  ASSERT_EQ(p.view_a.objects.size(), objs.size());
  for (std::size_t i = 0; i < objs.size(); ++i) EXPECT_EQ(p.view_a.objects[i].mask, objs[i].mask);
  EXPECT_EQ(p.correspondence.size(), objs.size());
}

TEST(Augment, FlipMovesCentroid) {
  const int w = 50, h = 20;
  const Mask m = test::rect_mask(w, h, 3, 4, 9, 10);
  TransformParams t{0, 0, w, h, w, h, true, 0, w, h};
  const Mask f = apply_transform(m, t);
  const auto [cx, cy] = *m.centroid();
  const auto [fx, fy] = *f.centroid();
  EXPECT_DOUBLE_EQ(fx, w - 1 - cx);
  EXPECT_DOUBLE_EQ(fy, cy);
}

TEST(Augment, QuarterTurnOnThreeByFive) {
  Rng rng(2);
  const Mask m = test::random_mask(rng, 3, 5, 0.5);
  TransformParams t{0, 0, 3, 5, 3, 5, false, 90, 5, 3};
  const Mask r = apply_transform(m, t);
  ASSERT_EQ(r.width(), 5);
  ASSERT_EQ(r.height(), 3);
  // Clockwise: out(x, y) = in(y, H-1-x).
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_EQ(r.at(x, y), m.at(y, 4 - x));
}

TEST(Augment, MaskTransformCommutesWithSourceLookup) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const int w = 8 + static_cast<int>(rng.uniform_index(60));
    const int h = 8 + static_cast<int>(rng.uniform_index(60));
    const Mask m = test::random_mask(rng, w, h, 0.4);
    AugmentationConfig cfg;
    cfg.resize_target = rng.bernoulli(0.5) ? 16 + static_cast<int>(rng.uniform_index(64)) : 0;
    if (rng.bernoulli(0.3)) cfg.arbitrary_rotation_max_degrees = 45;
    const auto t = sample_transform(w, h, cfg, rng);
    const Mask out = apply_transform(m, t);
    ASSERT_EQ(out.width(), t.output_width);
    ASSERT_EQ(out.height(), t.output_height);
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) {
        const auto src = source_pixel(t, x, y, w, h);
        EXPECT_EQ(out.at(x, y), src ? m.at(src->first, src->second) : false) << i << ": " << x << "," << y;
      }
  }
}

TEST(Augment, SampledTransformsRespectConfig) {
  Rng rng(4);
  AugmentationConfig cfg;
  cfg.resize_target = 64;
  for (int i = 0; i < 500; ++i) {
    const auto t = sample_transform(200, 100, cfg, rng);
    const double frac = static_cast<double>(t.crop_width) * t.crop_height / (200.0 * 100.0);
    EXPECT_GE(frac, 0.6 - 0.03);
    EXPECT_LE(frac, 1.0);
    EXPECT_GE(t.crop_x, 0);
    EXPECT_LE(t.crop_x + t.crop_width, 200);
    EXPECT_LE(t.crop_y + t.crop_height, 100);
    EXPECT_EQ(std::max(t.resized_width, t.resized_height), 64);
    const int d = static_cast<int>(t.rotation_degrees);
    EXPECT_TRUE(d == 0 || d == 90 || d == 180 || d == 270);
  }
}

TEST(Augment, CorrespondenceIsBijectiveAndSymmetric) {
  const auto corpus = make_shapes_corpus(20, 9);
  AugmentationConfig cfg;
  cfg.resize_target = 96;
  for (std::size_t i = 0; i < 40; ++i) {
    const auto p = pretrain_pair(corpus, cfg, i);
    std::set<std::string> a, b;
    for (const auto& o : p.view_a.objects) EXPECT_TRUE(a.insert(o.track_id).second);
    for (const auto& o : p.view_b.objects) EXPECT_TRUE(b.insert(o.track_id).second);
    std::vector<std::string> both;
    for (const auto& t : a)
      if (b.contains(t)) both.push_back(t);
    EXPECT_EQ(p.correspondence, both);
    EXPECT_FALSE(p.correspondence.empty());
    for (const auto& o : p.view_a.objects) EXPECT_GE(o.mask.area(), static_cast<std::size_t>(cfg.visibility_threshold));
    for (const auto& o : p.view_b.objects) EXPECT_GE(o.mask.area(), static_cast<std::size_t>(cfg.visibility_threshold));
  }
}

TEST(Augment, NoCorrespondenceWhenNothingSurvives) {
  Rng rng(5);
  const Image img = test::random_image(rng, 20, 20);
  std::vector<SegmentedObject> objs{{"o", "s", test::rect_mask(20, 20, 0, 0, 2, 2), std::nullopt}};
  auto cfg = identity_config();
  cfg.visibility_threshold = 16;
  EXPECT_THROW(simulate_pair(img, objs, cfg), NoCorrespondenceError);
  EXPECT_THROW(simulate_pair(img, {}, cfg), NoCorrespondenceError);
}

TEST(Augment, ArbitraryRotationStaysBinaryAndKeepsSize) {
  const Mask m = test::disk_mask(40, 30, 20, 15, 10);
  TransformParams t{0, 0, 40, 30, 40, 30, false, 30, 40, 30};
  const Mask r = apply_transform(m, t);
  EXPECT_EQ(r.width(), 40);
  EXPECT_EQ(r.height(), 30);
  for (auto c : r.cells()) EXPECT_TRUE(c == 0 || c == 1);
  // A centred disk survives rotation about the centre almost unchanged.
  EXPECT_NEAR(static_cast<double>(r.area()), static_cast<double>(m.area()), 0.1 * static_cast<double>(m.area()));
}

TEST(Stream, CountsCyclingAndDeterminism) {
  const auto corpus = make_shapes_corpus(3, 2);
  AugmentationConfig cfg;
  cfg.resize_target = 64;
  cfg.seed = 17;
  EXPECT_TRUE(build_pretrain_stream(corpus, cfg, 0).empty());
  const auto s = build_pretrain_stream(corpus, cfg, 10, 1);
  ASSERT_EQ(s.size(), 10u);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i].source_id, corpus[i % 3].id);
  const auto par = build_pretrain_stream(corpus, cfg, 10, 4);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(par[i].view_a.image, s[i].view_a.image);
    EXPECT_EQ(par[i].view_b.transform, s[i].view_b.transform);
    EXPECT_EQ(par[i].correspondence, s[i].correspondence);
  }
  EXPECT_THROW(build_pretrain_stream({}, cfg, 1), InvalidArgument);
}

TEST(Augment, ConfigValidation) {
  AugmentationConfig c;
  c.crop_scale_lo = 0;
  EXPECT_THROW(validate(c), InvalidArgument);
  c = {};
  c.crop_scale_hi = 1.5;
  EXPECT_THROW(validate(c), InvalidArgument);
  c = {};
  c.hflip_prob = -0.1;
  EXPECT_THROW(validate(c), InvalidArgument);
  c = {};
  c.rotation_degrees = {45};
  EXPECT_THROW(validate(c), InvalidArgument);
  EXPECT_NO_THROW(validate(AugmentationConfig{}));
}

TEST(ShapesCorpus, DistinctColorsAndVisibleObjects) {
  const auto corpus = make_shapes_corpus(10, 4);
  ASSERT_EQ(corpus.size(), 10u);
  for (const auto& c : corpus) {
    EXPECT_GE(c.objects.size(), 1u);
    for (const auto& o : c.objects) EXPECT_GE(o.mask.area(), 24u);
  }
  EXPECT_EQ(corpus[3].image, make_shapes_corpus(10, 4)[3].image);
}
