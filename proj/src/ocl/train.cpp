#include "ocl/train.hpp"

#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace mmvm::ocl {

PooledPair pool_pair(const pseudo::PseudoPair& pair, const VisionEncoder& base, const VisionEncoder& expert) {
  if (pair.correspondence.empty()) throw InvalidArgument("pair has no correspondence");
  if (pair.view_b.objects.size() < 2) throw InvalidArgument("pair needs at least two objects in view_b");
  PooledPair out;
  const FeatureMap fb = base.encode(pair.view_b.image);
  for (const auto& obj : pair.view_b.objects) {
    out.base_objects.push_back({masked_average_pool(fb, obj.mask), base.name(), obj.track_id});
  }
  const FeatureMap fa = expert.encode(pair.view_a.image);
  for (const auto& track : pair.correspondence) {
    std::size_t pos = out.base_objects.size();
    for (std::size_t i = 0; i < out.base_objects.size(); ++i) {
      if (out.base_objects[i].track_id == track) pos = i;
    }
    if (pos == out.base_objects.size()) throw InvalidArgument("corresponded track missing from view_b: " + track);
    const SegmentedObject* anchor = nullptr;
    for (const auto& obj : pair.view_a.objects) {
      if (obj.track_id == track) anchor = &obj;
    }
    if (anchor == nullptr) throw InvalidArgument("corresponded track missing from view_a: " + track);
    out.anchor_tracks.push_back(track);
    out.expert_inputs.push_back(masked_average_pool(fa, anchor->mask));
    out.positive_index.push_back(pos);
  }
  return out;
}

std::vector<ContrastiveBatch> build_batches(const pseudo::PseudoPair& pair, const VisionEncoder& base,
                                            const VisionEncoder& expert, const Adapter& adapter) {
  const PooledPair pools = pool_pair(pair, base, expert);
  std::vector<ContrastiveBatch> batches;
  for (std::size_t t = 0; t < pools.anchor_tracks.size(); ++t) {
    ContrastiveBatch b;
    b.anchor = {adapter_forward(adapter, pools.expert_inputs[t]), expert.name(), pools.anchor_tracks[t]};
    b.positive = pools.base_objects[pools.positive_index[t]];
    for (std::size_t i = 0; i < pools.base_objects.size(); ++i) {
      if (i != pools.positive_index[t]) b.negatives.push_back(pools.base_objects[i]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

TrainResult train_on_pools(const std::function<const PooledPair&(std::size_t)>& pools, Adapter initial,
                           const TrainConfig& config) {
  if (config.steps < 0 || config.pairs_per_step < 1) throw InvalidArgument("invalid training schedule");
  if (config.learning_rate < 0 || config.momentum < 0 || config.momentum >= 1) {
    throw InvalidArgument("invalid optimizer settings");
  }
  TrainResult result{std::move(initial), {}};
  Adapter& a = result.adapter;
  std::vector<double> params = a.flat();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad(params.size());
  for (int step = 0; step < config.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss_sum = 0;
    int batches = 0;
    for (int k = 0; k < config.pairs_per_step; ++k) {
      const PooledPair& p = pools(static_cast<std::size_t>(step) * config.pairs_per_step + k);
      std::vector<std::span<const double>> negatives;
      for (std::size_t t = 0; t < p.anchor_tracks.size(); ++t) {
        const AdapterTrace trace = adapter_forward_trace(a, p.expert_inputs[t]);
        negatives.clear();
        for (std::size_t i = 0; i < p.base_objects.size(); ++i) {
          if (i != p.positive_index[t]) negatives.emplace_back(p.base_objects[i].vector);
        }
        const LossResult r =
            contrastive_loss(trace.out, p.base_objects[p.positive_index[t]].vector, negatives, config.loss);
        loss_sum += r.loss;
        ++batches;
        adapter_backward(a, p.expert_inputs[t], trace, r.grad_anchor, grad);
      }
    }
    if (batches == 0) throw InvalidArgument("training step " + std::to_string(step) + " has no batches");
    const double mean = loss_sum / batches;
    if (!std::isfinite(mean)) throw NumericError("non-finite loss at step " + std::to_string(step), step);
    for (std::size_t i = 0; i < params.size(); ++i) {
      velocity[i] = config.momentum * velocity[i] + grad[i] / batches;
      params[i] -= config.learning_rate * velocity[i];
    }
    a.set_flat(params);
    ++a.steps;
    result.trace.push_back({step, mean, batches});
  }
  return result;
}

TrainResult pretrain_adapter(const PairStream& stream, const VisionEncoder& base, const VisionEncoder& expert,
                             Adapter initial, const TrainConfig& config) {
  if (initial.in_dim != expert.output_dim() || initial.out_dim != base.output_dim()) {
    throw InvalidArgument("adapter dimensions do not bridge expert and base encoders");
  }
  const std::string base_hash = base.parameter_hash();
  const std::string expert_hash = expert.parameter_hash();
  PooledPair current;
  TrainResult r = train_on_pools(
      [&](std::size_t i) -> const PooledPair& {
        current = pool_pair(stream(i), base, expert);
        return current;
      },
      std::move(initial), config);
  if (base.parameter_hash() != base_hash || expert.parameter_hash() != expert_hash) {
    throw std::logic_error("encoder parameters changed during adapter training");
  }
  return r;
}

std::string loss_trace_csv(const std::vector<StepLoss>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "step,loss,n_batches\n";
  for (const auto& s : trace) out << s.step << ',' << s.loss << ',' << s.batches << '\n';
  return out.str();
}

MatchingAccuracy evaluate_matching(const std::vector<PooledPair>& pools, const Adapter& adapter, double temperature) {
  MatchingAccuracy acc;
  for (const auto& p : pools) {
    for (std::size_t t = 0; t < p.anchor_tracks.size(); ++t) {
      const ObjectEmbedding q{adapter_forward(adapter, p.expert_inputs[t]), "adapter", p.anchor_tracks[t]};
      const auto ranked = match_by_embedding(q, p.base_objects, temperature);
      ++acc.total;
      if (ranked.front().index == p.positive_index[t]) ++acc.correct;
    }
  }
  return acc;
}

}  // namespace mmvm::ocl
