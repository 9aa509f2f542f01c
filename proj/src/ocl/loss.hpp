#pragma once

#include <span>
#include <string>
#include <vector>

namespace mmvm::ocl {

struct ObjectEmbedding {
  std::vector<double> vector;
  std::string source;  // encoder name
  std::string track_id;
};

struct ContrastiveBatch {
  ObjectEmbedding anchor;    // expert side, through the adapter
  ObjectEmbedding positive;  // base side, same track
  std::vector<ObjectEmbedding> negatives;
};

struct LossOptions {
  double temperature = 1.0;
  bool cosine = false;  // normalize vectors before the dot product
};

struct LossResult {
  double loss = 0;
  std::vector<double> grad_anchor;
  std::vector<double> grad_positive;
  std::vector<std::vector<double>> grad_negatives;
};

// -log( exp(a.p/t) / (exp(a.p/t) + sum_i exp(a.n_i/t)) ), max-subtracted.
LossResult contrastive_loss(std::span<const double> anchor, std::span<const double> positive,
                            std::span<const std::span<const double>> negatives, const LossOptions& options = {});

LossResult contrastive_loss(const ContrastiveBatch& batch, const LossOptions& options = {});

// The probability ratio itself, exp(-loss).
double match_probability(const ContrastiveBatch& batch, const LossOptions& options = {});

struct RankedCandidate {
  std::size_t index;
  double score;  // q.c / t
};

// Descending score; ties keep candidate order.
std::vector<RankedCandidate> match_by_embedding(const ObjectEmbedding& query,
                                                const std::vector<ObjectEmbedding>& candidates,
                                                double temperature = 1.0);

}  // namespace mmvm::ocl
