#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ocl/adapter.hpp"
#include "ocl/features.hpp"
#include "ocl/loss.hpp"
#include "pseudo/augment.hpp"

namespace mmvm::ocl {

// Pooled features for one pseudo pair before the adapter.
struct PooledPair {
  std::vector<std::string> anchor_tracks;          // corresponded tracks that have a negative
  std::vector<std::vector<double>> expert_inputs;  // view_a expert pools, parallel to anchor_tracks
  std::vector<ObjectEmbedding> base_objects;       // view_b base pools, view_b object order
  std::vector<std::size_t> positive_index;         // into base_objects, parallel to anchor_tracks
};

// Throws InvalidArgument when the pair has no correspondence, fewer than two
// view_b objects, or no track with a negative.
PooledPair pool_pair(const pseudo::PseudoPair& pair, const VisionEncoder& base, const VisionEncoder& expert);

// One batch per corresponded track: anchor = adapter(expert pool on view_a),
// positive and negatives = base pools on view_b.
std::vector<ContrastiveBatch> build_batches(const pseudo::PseudoPair& pair, const VisionEncoder& base,
                                            const VisionEncoder& expert, const Adapter& adapter);

struct TrainConfig {
  int steps = 1000;
  int pairs_per_step = 1;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  LossOptions loss;
};

struct StepLoss {
  int step = 0;
  double loss = 0;  // mean over the step's batches
  int batches = 0;
};

struct TrainResult {
  Adapter adapter;
  std::vector<StepLoss> trace;
};

using PairStream = std::function<pseudo::PseudoPair(std::size_t)>;

// SGD with momentum on adapter parameters only; step s consumes stream
// indices s*pairs_per_step .. +pairs_per_step-1. Throws NumericError with the
// step index on a non-finite loss.
TrainResult pretrain_adapter(const PairStream& stream, const VisionEncoder& base, const VisionEncoder& expert,
                             Adapter initial, const TrainConfig& config);

// Same loop on precomputed pools.
TrainResult train_on_pools(const std::function<const PooledPair&(std::size_t)>& pools, Adapter initial,
                           const TrainConfig& config);

std::string loss_trace_csv(const std::vector<StepLoss>& trace);

struct MatchingAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double fraction() const noexcept { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

// Every corresponded track in every pair is a query against all view_b
// objects; correct when the true track ranks first.
MatchingAccuracy evaluate_matching(const std::vector<PooledPair>& pools, const Adapter& adapter,
                                   double temperature = 1.0);

}  // namespace mmvm::ocl
