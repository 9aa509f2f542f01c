#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "core/error.hpp"
#include "gradcheck.hpp"
#include "ocl/adapter.hpp"
#include "ocl/features.hpp"
#include "ocl/loss.hpp"
#include "ocl/train.hpp"
#include "pseudo/augment.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mmvm;
using namespace mmvm::ocl;

namespace {

using Spans = std::vector<std::span<const double>>;

FeatureMap random_map(Rng& rng, int c, int h, int w, int stride) {
  FeatureMap fm(c, h, w, stride);
  for (double& v : fm.data) v = rng.normal();
  return fm;
}

// Straight-line adapter evaluation.
std::vector<double> adapter_oracle(const Adapter& ad, const std::vector<double>& x) {
  std::vector<double> h(static_cast<std::size_t>(ad.hidden_dim));
  for (int i = 0; i < ad.hidden_dim; ++i) {
    double s = ad.b1[static_cast<std::size_t>(i)];
    for (int j = 0; j < ad.in_dim; ++j) s += ad.w1[static_cast<std::size_t>(i * ad.in_dim + j)] * x[static_cast<std::size_t>(j)];
    h[static_cast<std::size_t>(i)] = s > 0 ? s : 0;
  }
  std::vector<double> y(static_cast<std::size_t>(ad.out_dim));
  for (int i = 0; i < ad.out_dim; ++i) {
    double s = ad.b2[static_cast<std::size_t>(i)];
    for (int j = 0; j < ad.hidden_dim; ++j) s += ad.w2[static_cast<std::size_t>(i * ad.hidden_dim + j)] * h[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

// Pools where each track's expert input is a fixed random vector and its base
// embedding a fixed random unit vector; solvable by a linear map.
std::vector<PooledPair> separable_pools(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  constexpr int kTracks = 6, kIn = 6, kOut = 8;
  std::vector<std::vector<double>> ex(kTracks), base(kTracks);
  for (int t = 0; t < kTracks; ++t) {
    for (int j = 0; j < kIn; ++j) ex[static_cast<std::size_t>(t)].push_back(rng.normal());
    double norm = 0;
    for (int j = 0; j < kOut; ++j) {
      base[static_cast<std::size_t>(t)].push_back(rng.normal());
      norm += base[static_cast<std::size_t>(t)].back() * base[static_cast<std::size_t>(t)].back();
    }
    for (double& v : base[static_cast<std::size_t>(t)]) v /= std::sqrt(norm);
  }
  std::vector<PooledPair> pools(count);
  for (auto& p : pools) {
    std::vector<std::size_t> order(kTracks);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    const std::size_t n = 3 + rng.uniform_index(kTracks - 2);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = order[i];
      p.base_objects.push_back({base[t], "base", "t" + std::to_string(t)});
    }
    for (std::size_t i = 0; i < n; ++i) {
      p.anchor_tracks.push_back("t" + std::to_string(order[i]));
      p.expert_inputs.push_back(ex[order[i]]);
      p.positive_index.push_back(i);
    }
  }
  return pools;
}

}  // namespace

TEST(Pool, GridExamples) {
  FeatureMap fm(1, 2, 2, 1);
  fm.data = {1, 2, 3, 4};
  Mask top(2, 2);
  top.set(0, 0);
  top.set(1, 0);
  EXPECT_DOUBLE_EQ(masked_average_pool(fm, top)[0], 1.5);
  const Mask full = test::rect_mask(2, 2, 0, 0, 2, 2);
  EXPECT_DOUBLE_EQ(masked_average_pool(fm, full)[0], 2.5);
}

TEST(Pool, MatchesBruteForceOracle) {
  Rng rng(1);
  for (int i = 0; i < 300; ++i) {
    const int stride = 1 + static_cast<int>(rng.uniform_index(4));
    const int w = 8 * stride - static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(stride)));
    const int h = 8 * stride - static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(stride)));
    const FeatureMap fm = random_map(rng, 4, grid_extent(h, stride), grid_extent(w, stride), stride);
    const Mask m = test::random_mask(rng, w, h, rng.uniform(0.01, 0.9));
    const auto got = masked_average_pool(fm, m);
    const auto want = test::pool_oracle(fm, m);
    for (std::size_t c = 0; c < got.size(); ++c) EXPECT_NEAR(got[c], want[c], 1e-12);
  }
}

TEST(Pool, LinearInFeatures) {
  Rng rng(2);
  FeatureMap fm = random_map(rng, 3, 8, 8, 2);
  const Mask m = test::random_mask(rng, 16, 16, 0.5);
  const auto base = masked_average_pool(fm, m);
  for (double& v : fm.data) v *= -2.5;
  const auto scaled = masked_average_pool(fm, m);
  for (std::size_t c = 0; c < base.size(); ++c) EXPECT_NEAR(scaled[c], -2.5 * base[c], 1e-12);
}

TEST(Pool, CentroidFallbackAndErrors) {
  FeatureMap fm(1, 2, 2, 4);
  fm.data = {1, 2, 3, 4};
  Mask speck(8, 8);
  speck.set(5, 6);
  EXPECT_EQ(pooled_cells(speck, 4), (std::vector<std::size_t>{3}));
  EXPECT_DOUBLE_EQ(masked_average_pool(fm, speck)[0], 4.0);
  EXPECT_THROW(masked_average_pool(fm, Mask(8, 8)), InvalidArgument);
  EXPECT_THROW(masked_average_pool(fm, test::rect_mask(12, 8, 0, 0, 2, 2)), InvalidArgument);
}

TEST(Loss, ClosedFormExamples) {
  const std::vector<double> a{1, 0}, p{1, 0}, n{0, 1};
  EXPECT_NEAR(contrastive_loss(a, p, Spans{n}).loss, 0.313262, 1e-6);
  EXPECT_NEAR(contrastive_loss(a, p, Spans{n}).loss, std::log(1 + std::exp(-1.0)), 1e-15);
  EXPECT_EQ(contrastive_loss(a, p, Spans{}).loss, 0.0);
  EXPECT_NEAR(contrastive_loss(a, p, Spans{p, p, p}).loss, std::log(4.0), 1e-12);
}

TEST(Loss, GradientsMatchFiniteDifferences) {
  Rng rng(3);
  for (bool cosine : {false, true}) {
    for (int i = 0; i < 50; ++i) {
      const auto in = test::random_loss_inputs(rng, 2 + rng.uniform_index(30), rng.uniform_index(9));
      LossOptions o{std::vector<double>{0.07, 0.5, 1.0}[rng.uniform_index(3)], cosine};
      EXPECT_LT(test::gradient_relative_error(in, o), 1e-4) << "cosine=" << cosine << " i=" << i;
    }
  }
}

TEST(Loss, ShiftInvariance) {
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    auto in = test::random_loss_inputs(rng, 8, 4);
    std::vector<std::span<const double>> ns(in.n.begin(), in.n.end());
    const auto r0 = contrastive_loss(in.a, in.p, ns);
    // Adding c*a/|a|^2 to every candidate raises each similarity by c.
    const double c = rng.uniform(-5, 5);
    double aa = 0;
    for (double v : in.a) aa += v * v;
    auto shifted = in;
    auto add = [&](std::vector<double>& v) {
      for (std::size_t j = 0; j < v.size(); ++j) v[j] += c * in.a[j] / aa;
    };
    add(shifted.p);
    for (auto& v : shifted.n) add(v);
    std::vector<std::span<const double>> ns2(shifted.n.begin(), shifted.n.end());
    const auto r1 = contrastive_loss(shifted.a, shifted.p, ns2);
    EXPECT_NEAR(r0.loss, r1.loss, 1e-10);
    for (std::size_t j = 0; j < r0.grad_positive.size(); ++j) EXPECT_NEAR(r0.grad_positive[j], r1.grad_positive[j], 1e-10);
    for (std::size_t k = 0; k < r0.grad_negatives.size(); ++k)
      for (std::size_t j = 0; j < r0.grad_negatives[k].size(); ++j)
        EXPECT_NEAR(r0.grad_negatives[k][j], r1.grad_negatives[k][j], 1e-10);
  }
}

TEST(Loss, LargeSimilaritiesStayFinite) {
  const std::vector<double> a{100, 0}, p{100, 0}, n1{0, 100}, n2{-100, 0};
  for (double t : {1.0, 0.07}) {
    const auto r = contrastive_loss(a, p, Spans{n1, n2}, {t, false});
    EXPECT_TRUE(std::isfinite(r.loss));
    EXPECT_GE(r.loss, 0.0);
    for (double g : r.grad_anchor) EXPECT_TRUE(std::isfinite(g));
    // Reversed roles: the loss is large but finite.
    const auto bad = contrastive_loss(a, n2, Spans{p}, {t, false});
    EXPECT_TRUE(std::isfinite(bad.loss));
    EXPECT_NEAR(bad.loss, 2e4 / t, 1e-6 * 2e4 / t);
  }
}

TEST(Loss, PositiveWheneverNegativesExistAndShrinksWithMargin) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto in = test::random_loss_inputs(rng, 6, 1 + rng.uniform_index(5));
    EXPECT_GT(test::loss_of(in, {}), 0.0);
  }
  const std::vector<double> a{1, 0}, n{0, 1};
  double prev = INFINITY;
  for (double m : {0.0, 1.0, 5.0, 20.0, 40.0}) {
    const std::vector<double> p{m, 0};
    const double l = contrastive_loss(a, p, Spans{n}).loss;
    EXPECT_LT(l, prev);
    EXPECT_GT(l, 0.0);
    prev = l;
  }
  EXPECT_LT(prev, 1e-15);
}

TEST(Loss, ErrorsAndBatchInvariants) {
  const std::vector<double> a{1, 0}, p{1, 0}, bad{1, 0, 0};
  EXPECT_THROW(contrastive_loss(a, p, Spans{}, {0.0, false}), InvalidArgument);
  EXPECT_THROW(contrastive_loss(a, p, Spans{}, {-1.0, false}), InvalidArgument);
  EXPECT_THROW(contrastive_loss(a, bad, Spans{}), InvalidArgument);
  EXPECT_THROW(contrastive_loss(a, p, Spans{bad}), InvalidArgument);
  ContrastiveBatch b{{a, "x", "t1"}, {p, "b", "t1"}, {{p, "b", "t1"}}};
  EXPECT_THROW(contrastive_loss(b), InvalidArgument);
  b.negatives[0].track_id = "t2";
  EXPECT_NEAR(match_probability(b), 0.5, 1e-15);
}

TEST(Match, RankingExamples) {
  const ObjectEmbedding q{{1, 0, 0}, "x", "q"};
  std::vector<ObjectEmbedding> c{{{0, 1, 0}, "b", "a"}, {{1, 0, 0}, "b", "b"}, {{0, 0, 1}, "b", "c"}};
  EXPECT_EQ(match_by_embedding(q, c).front().index, 1u);
  std::vector<ObjectEmbedding> same(4, {{2, 2, 2}, "b", ""});
  const auto r = match_by_embedding(q, same);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r[i].index, i);
  Rng rng(6);
  std::vector<ObjectEmbedding> rand;
  for (int i = 0; i < 30; ++i) rand.push_back({{rng.normal(), rng.normal(), rng.normal()}, "b", ""});
  const auto got = match_by_embedding(q, rand, 0.5);
  std::vector<std::size_t> idx(rand.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return rand[x].vector[0] != rand[y].vector[0] ? rand[x].vector[0] > rand[y].vector[0] : x < y;
  });
  for (std::size_t i = 0; i < idx.size(); ++i) {
    EXPECT_EQ(got[i].index, idx[i]);
    EXPECT_DOUBLE_EQ(got[i].score, rand[idx[i]].vector[0] / 0.5);
  }
  EXPECT_THROW(match_by_embedding(q, {}), InvalidArgument);
}

TEST(AdapterTest, ZeroIdentityAndOracle) {
  const Adapter z = zero_adapter(4, 6, 3);
  for (double v : adapter_forward(z, std::vector<double>{1, -2, 3, 4})) EXPECT_EQ(v, 0.0);

  Adapter id = zero_adapter(3, 3, 3);
  for (int i = 0; i < 3; ++i) {
    id.w1[static_cast<std::size_t>(i * 4)] = 1;
    id.w2[static_cast<std::size_t>(i * 4)] = 1;
  }
  const std::vector<double> x{0.5, 2, 7};
  EXPECT_EQ(adapter_forward(id, x), x);

  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const Adapter ad = make_adapter(5, 9, 4, 100 + static_cast<std::uint64_t>(i));
    std::vector<double> in(5);
    for (double& v : in) v = rng.normal();
    const auto got = adapter_forward(ad, in);
    const auto want = adapter_oracle(ad, in);
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-10);
  }
  EXPECT_THROW(adapter_forward(z, std::vector<double>{1, 2}), InvalidArgument);
}

TEST(AdapterTest, BackwardMatchesFiniteDifferences) {
  Rng rng(8);
  Adapter ad = make_adapter(4, 7, 3, 5);
  for (double& b : ad.b1) b = rng.normal() * 0.1;
  std::vector<double> x(4), g(3);
  for (double& v : x) v = rng.normal();
  for (double& v : g) v = rng.normal();
  // Scalar objective L = g . adapter(x).
  auto objective = [&](const Adapter& a) {
    const auto y = adapter_forward(a, x);
    return std::inner_product(y.begin(), y.end(), g.begin(), 0.0);
  };
  std::vector<double> grad(ad.parameter_count(), 0.0);
  adapter_backward(ad, x, adapter_forward_trace(ad, x), g, grad);
  auto flat = ad.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double h = 1e-6;
    auto up = flat, down = flat;
    up[i] += h;
    down[i] -= h;
    Adapter au = ad, adn = ad;
    au.set_flat(up);
    adn.set_flat(down);
    EXPECT_NEAR(grad[i], (objective(au) - objective(adn)) / (2 * h), 1e-6) << i;
  }
}

TEST(Checkpoint, RoundTripAndCorruption) {
  Adapter ad = make_adapter(6, 5, 4, 77);
  ad.steps = 123;
  const std::string bytes = serialize_adapter(ad);
  EXPECT_EQ(bytes.substr(0, 8), "MMVMADPT");
  EXPECT_EQ(bytes.size(), 8 + 4 * 4 + 8 + 8 + ad.parameter_count() * 8 + 32);
  EXPECT_EQ(parse_adapter(bytes), ad);
  std::string flipped = bytes;
  flipped[60] ^= 1;
  EXPECT_THROW(parse_adapter(flipped), ParseError);
  EXPECT_THROW(parse_adapter(bytes.substr(0, bytes.size() - 1)), ParseError);
  EXPECT_THROW(parse_adapter("MMVMXXXX"), ParseError);
  const auto dir = std::filesystem::temp_directory_path() / "mmvm_test_ocl";
  std::filesystem::create_directories(dir);
  save_adapter(dir / "a.bin", ad);
  EXPECT_EQ(load_adapter(dir / "a.bin"), ad);
  EXPECT_EQ(adapter_hash(ad), adapter_hash(load_adapter(dir / "a.bin")));
  std::filesystem::remove_all(dir);
}

TEST(Encoders, DeterministicAndShaped) {
  const auto base = make_base_encoder();
  const auto expert = make_expert_encoder();
  Rng rng(9);
  const Image img = test::random_image(rng, 37, 21);
  const auto fb = base->encode(img);
  EXPECT_EQ(fb.channels, 64);
  EXPECT_EQ(fb.width, grid_extent(37, 8));
  EXPECT_EQ(fb.height, grid_extent(21, 8));
  const auto fe = expert->encode(img);
  EXPECT_EQ(fe.channels, 96);
  EXPECT_EQ(fe.width, grid_extent(37, 4));
  EXPECT_EQ(base->encode(img).data, fb.data);
  EXPECT_EQ(make_base_encoder()->parameter_hash(), base->parameter_hash());
  EXPECT_NE(make_base_encoder(12)->parameter_hash(), base->parameter_hash());
  for (double v : fb.data) EXPECT_LE(std::abs(v), std::sqrt(2.0 / 64) + 1e-12);
}

TEST(Batches, ConstructionRule) {
  const int w = 64, h = 64;
  const Image img(w, h, {120, 120, 120});
  std::vector<SegmentedObject> objs;
  for (int k = 0; k < 3; ++k)
    objs.push_back({"t" + std::to_string(k), "s", test::rect_mask(w, h, k * 20, 10, k * 20 + 16, 40), std::nullopt});
  pseudo::AugmentationConfig cfg;
  cfg.crop_scale_lo = cfg.crop_scale_hi = 1.0;
  cfg.hflip_prob = 0;
  cfg.rotation_degrees = {0};
  const auto pair = pseudo::simulate_pair(img, objs, cfg);
  const auto base = make_base_encoder();
  const auto expert = make_expert_encoder();
  const Adapter ad = make_adapter(96, 16, 64, 3);
  const auto batches = build_batches(pair, *base, *expert, ad);
  ASSERT_EQ(batches.size(), 3u);
  for (const auto& b : batches) {
    EXPECT_EQ(b.negatives.size(), 2u);
    EXPECT_EQ(b.anchor.track_id, b.positive.track_id);
    for (const auto& n : b.negatives) EXPECT_NE(n.track_id, b.anchor.track_id);
  }
  // Recompose by hand: expert pool on view a through the adapter, base pool on view b.
  const auto fa = expert->encode(pair.view_a.image);
  const auto fb = base->encode(pair.view_b.image);
  EXPECT_EQ(batches[0].anchor.vector, adapter_forward(ad, masked_average_pool(fa, pair.view_a.objects[0].mask)));
  EXPECT_EQ(batches[0].positive.vector, masked_average_pool(fb, pair.view_b.objects[0].mask));

  std::vector<SegmentedObject> two{objs[0], objs[1]};
  auto p2 = pseudo::simulate_pair(img, two, cfg);
  p2.view_a.objects.pop_back();
  p2.correspondence = {"t0"};
  const auto b2 = build_batches(p2, *base, *expert, ad);
  ASSERT_EQ(b2.size(), 1u);
  EXPECT_EQ(b2[0].negatives.size(), 1u);

  auto lonely = pseudo::simulate_pair(img, std::vector<SegmentedObject>{objs[0]}, cfg);
  EXPECT_THROW(build_batches(lonely, *base, *expert, ad), InvalidArgument);
}

TEST(Train, ZeroLearningRateIsNoOp) {
  const auto pools = separable_pools(20, 1);
  const Adapter init = make_adapter(6, 16, 8, 4);
  TrainConfig cfg;
  cfg.steps = 30;
  cfg.learning_rate = 0;
  const auto r = train_on_pools([&](std::size_t i) -> const PooledPair& { return pools[i % pools.size()]; }, init, cfg);
  EXPECT_EQ(r.adapter.flat(), init.flat());
  EXPECT_EQ(r.trace.size(), 30u);
}

TEST(Train, SeparableEmbeddingsConverge) {
  const auto pools = separable_pools(64, 2);
  TrainConfig cfg;
  cfg.steps = 500;
  cfg.learning_rate = 0.05;
  const auto r = train_on_pools([&](std::size_t i) -> const PooledPair& { return pools[i % pools.size()]; },
                                make_adapter(6, 16, 8, 5), cfg);
  double tail = 0;
  for (std::size_t i = r.trace.size() - 50; i < r.trace.size(); ++i) tail += r.trace[i].loss;
  tail /= 50;
  EXPECT_LT(tail, 0.05);
  EXPECT_GT(evaluate_matching(pools, r.adapter).fraction(), 0.99);
  EXPECT_EQ(r.adapter.steps, 500u);
  const auto csv = loss_trace_csv(r.trace);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,loss,n_batches");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 501);
}

TEST(Train, EncodersStayFrozenAndRunIsDeterministic) {
  const auto corpus = pseudo::make_shapes_corpus(6, 3);
  pseudo::AugmentationConfig aug;
  aug.resize_target = 96;
  const auto base = make_base_encoder();
  const auto expert = make_expert_encoder();
  const std::string hb = base->parameter_hash(), he = expert->parameter_hash();
  const PairStream stream = [&](std::size_t i) { return pseudo::pretrain_pair(corpus, aug, i); };
  TrainConfig cfg;
  cfg.steps = 5;
  const auto a = pretrain_adapter(stream, *base, *expert, make_adapter(96, 32, 64, 1), cfg);
  const auto b = pretrain_adapter(stream, *base, *expert, make_adapter(96, 32, 64, 1), cfg);
  EXPECT_EQ(a.adapter, b.adapter);
  EXPECT_EQ(base->parameter_hash(), hb);
  EXPECT_EQ(expert->parameter_hash(), he);
  EXPECT_NE(a.adapter, make_adapter(96, 32, 64, 1));
  EXPECT_THROW(pretrain_adapter(stream, *base, *expert, make_adapter(64, 32, 64, 1), cfg), InvalidArgument);
}

TEST(Train, NonFiniteLossAbortsWithStep) {
  auto pools = separable_pools(4, 3);
  pools[0].expert_inputs[0][0] = NAN;
  TrainConfig cfg;
  cfg.steps = 10;
  try {
    train_on_pools([&](std::size_t i) -> const PooledPair& { return pools[i % pools.size()]; }, make_adapter(6, 8, 8, 1), cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.step(), 0);
  }
}
