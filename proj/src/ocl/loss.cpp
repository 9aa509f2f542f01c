#include "ocl/loss.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace mmvm::ocl {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> normalized(std::span<const double> v, double& norm) {
  norm = std::sqrt(dot(v, v));
  if (!(norm > 0)) throw InvalidArgument("cosine similarity of a zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

// Pull a gradient w.r.t. v/|v| back to v.
void through_normalization(std::vector<double>& g, std::span<const double> unit, double norm) {
  const double proj = dot(g, unit);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (g[i] - proj * unit[i]) / norm;
}

LossResult raw_loss(std::span<const double> a, std::span<const double> p, std::span<const std::span<const double>> ns,
                    double t) {
  const std::size_t k = ns.size();
  std::vector<double> s(k + 1);
  s[0] = dot(a, p) / t;
  for (std::size_t i = 0; i < k; ++i) s[i + 1] = dot(a, ns[i]) / t;
  const double m = *std::max_element(s.begin(), s.end());
  double rest = 0;
  for (std::size_t i = 1; i <= k; ++i) rest += std::exp(s[i] - m);
  const double z = std::exp(s[0] - m) + rest;
  LossResult r;
  // log1p keeps small losses exact when the positive holds the maximum.
  r.loss = s[0] == m ? std::log1p(rest) : (m - s[0]) + std::log(z);
  std::vector<double> q(k + 1);
  for (std::size_t i = 0; i <= k; ++i) q[i] = std::exp(s[i] - m) / z;
  const std::size_t d = a.size();
  r.grad_anchor.assign(d, 0.0);
  r.grad_positive.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    r.grad_anchor[j] = (q[0] - 1.0) * p[j] / t;
    r.grad_positive[j] = (q[0] - 1.0) * a[j] / t;
  }
  r.grad_negatives.assign(k, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      r.grad_anchor[j] += q[i + 1] * ns[i][j] / t;
      r.grad_negatives[i][j] = q[i + 1] * a[j] / t;
    }
  }
  return r;
}

}  // namespace

LossResult contrastive_loss(std::span<const double> anchor, std::span<const double> positive,
                            std::span<const std::span<const double>> negatives, const LossOptions& options) {
  if (!(options.temperature > 0) || !std::isfinite(options.temperature)) {
    throw InvalidArgument("temperature must be positive");
  }
  const std::size_t d = anchor.size();
  if (d == 0 || positive.size() != d) throw InvalidArgument("embedding dimension mismatch");
  for (const auto& n : negatives) {
    if (n.size() != d) throw InvalidArgument("embedding dimension mismatch");
  }
  if (!options.cosine) return raw_loss(anchor, positive, negatives, options.temperature);

  double na, np;
  const auto ua = normalized(anchor, na);
  const auto up = normalized(positive, np);
  std::vector<std::vector<double>> un(negatives.size());
  std::vector<double> nn(negatives.size());
  std::vector<std::span<const double>> views;
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    un[i] = normalized(negatives[i], nn[i]);
    views.emplace_back(un[i]);
  }
  LossResult r = raw_loss(ua, up, views, options.temperature);
  through_normalization(r.grad_anchor, ua, na);
  through_normalization(r.grad_positive, up, np);
  for (std::size_t i = 0; i < negatives.size(); ++i) through_normalization(r.grad_negatives[i], un[i], nn[i]);
  return r;
}

LossResult contrastive_loss(const ContrastiveBatch& batch, const LossOptions& options) {
  for (const auto& n : batch.negatives) {
    if (n.track_id == batch.anchor.track_id && !n.track_id.empty()) {
      throw InvalidArgument("negative shares the anchor's track " + n.track_id);
    }
  }
  std::vector<std::span<const double>> ns;
  for (const auto& n : batch.negatives) ns.emplace_back(n.vector);
  return contrastive_loss(batch.anchor.vector, batch.positive.vector, ns, options);
}

double match_probability(const ContrastiveBatch& batch, const LossOptions& options) {
  return std::exp(-contrastive_loss(batch, options).loss);
}

std::vector<RankedCandidate> match_by_embedding(const ObjectEmbedding& query,
                                                const std::vector<ObjectEmbedding>& candidates, double temperature) {
  if (candidates.empty()) throw InvalidArgument("no candidates to match");
  if (!(temperature > 0)) throw InvalidArgument("temperature must be positive");
  std::vector<RankedCandidate> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].vector.size() != query.vector.size()) throw InvalidArgument("embedding dimension mismatch");
    out.push_back({i, dot(query.vector, candidates[i].vector) / temperature});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

}  // namespace mmvm::ocl
