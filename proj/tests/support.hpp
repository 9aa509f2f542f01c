#pragma once

#include <string>
#include <vector>

#include "core/manifest.hpp"
#include "core/rng.hpp"
#include "render/prompt_render.hpp"

namespace mmvm::test {

inline Mask random_mask(Rng& rng, int w, int h, double density) {
  Mask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, rng.bernoulli(density));
  }
  if (m.empty()) m.set(static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(w))),
                       static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(h))));
  return m;
}

inline Mask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  Mask m(w, h);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.set(x, y);
  }
  return m;
}

inline Mask disk_mask(int w, int h, double cx, double cy, double r) {
  Mask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if ((x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy) <= r * r) m.set(x, y);
    }
  }
  return m;
}

inline Image random_image(Rng& rng, int w, int h) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(rng.uniform_index(256)), static_cast<std::uint8_t>(rng.uniform_index(256)),
                     static_cast<std::uint8_t>(rng.uniform_index(256))});
    }
  }
  return img;
}

// Two 48x32 frames ("img1", "img2"); img1 holds track t1, img2 holds t1..tn.
// One question with n options in tag order; the answer is the option whose
// track is t1 (at position answer_index).
inline DatasetManifest small_manifest(int n_options = 4, std::size_t answer_index = 0) {
  DatasetManifest m;
  m.provenance = {"test", 1, "none"};
  ImageEntry a{{"img1", 48, 32, "img1.png"}, {}};
  a.objects.push_back({"t1", "img1", rect_mask(48, 32, 4, 4, 14, 14), "box"});
  ImageEntry b{{"img2", 48, 32, "img2.png"}, {}};
  std::vector<std::string> tracks;
  for (int k = 0; k < n_options; ++k) tracks.push_back("t" + std::to_string(k + 2));
  tracks[answer_index] = "t1";
  for (int k = 0; k < n_options; ++k) {
    const int x0 = (k % 4) * 12;
    const int y0 = (k / 4) * 8;
    b.objects.push_back({tracks[static_cast<std::size_t>(k)], "img2", rect_mask(48, 32, x0, y0, x0 + 10, y0 + 7), "box"});
  }
  m.images = {a, b};
  const auto palette = render::default_palette(std::max(1, n_options));
  MatchingQuestion q;
  q.id = "q1";
  q.image_ids = {"img1", "img2"};
  q.query = {ReferringMode::VisualPrompt, "img1", "t1", make_prompt_spec(1, palette[0]), ""};
  for (int k = 0; k < n_options; ++k) {
    q.options.push_back({option_label(static_cast<std::size_t>(k)),
                         {ReferringMode::VisualPrompt, "img2", tracks[static_cast<std::size_t>(k)],
                          make_prompt_spec(k + 1, palette[static_cast<std::size_t>(k)]), ""}});
  }
  q.answer = option_label(answer_index);
  q.match_types = {MatchType::CL};
  m.questions.push_back(q);
  return m;
}

// n text-referral questions with `options` options each; answers rotate
// through the labels; match types cycle through the eight codes.
inline DatasetManifest text_manifest(std::size_t n, int options = 4) {
  DatasetManifest m;
  m.provenance = {"test", 2, "none"};
  m.images.push_back({{"a", 8, 8, "a.png"}, {}});
  m.images.push_back({{"b", 8, 8, "b.png"}, {}});
  for (std::size_t i = 0; i < n; ++i) {
    MatchingQuestion q;
    q.id = "q" + std::to_string(i);
    q.image_ids = {"a", "b"};
    q.query = {ReferringMode::TextPrompt, "", "", std::nullopt, "the query object"};
    for (int k = 0; k < options; ++k) {
      q.options.push_back({option_label(static_cast<std::size_t>(k)),
                           {ReferringMode::TextPrompt, "", "", std::nullopt, "thing " + std::to_string(k)}});
    }
    q.answer = option_label(i % static_cast<std::size_t>(options));
    q.match_types = {kBenchmarkMatchTypes[i % kBenchmarkMatchTypes.size()]};
    m.questions.push_back(q);
  }
  return m;
}

// Fixture behind the frozen SFT golden file.
inline DatasetManifest sft_fixture_manifest() {
  auto m = small_manifest(4, 2);
  m.questions[0].reason = "Same size and color as the query square.";
  return m;
}

// n copies of the visual small_manifest question with ids q0..q{n-1}.
inline DatasetManifest repeated_questions(std::size_t n) {
  DatasetManifest m = small_manifest(4, 0);
  const auto base = m.questions[0];
  m.questions.clear();
  for (std::size_t i = 0; i < n; ++i) {
    auto q = base;
    q.id = "q" + std::to_string(i);
    m.questions.push_back(q);
  }
  return m;
}

}  // namespace mmvm::test
