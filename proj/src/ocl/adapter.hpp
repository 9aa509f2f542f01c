#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mmvm::ocl {

// y = W2 relu(W1 x + b1) + b2. Weights row-major (out x in).
struct Adapter {
  int in_dim = 0;
  int hidden_dim = 0;
  int out_dim = 0;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;  // optimizer steps applied
  std::vector<double> w1, b1, w2, b2;

  std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + b2.size(); }
  // All parameters, concatenated as w1, b1, w2, b2.
  std::vector<double> flat() const;
  void set_flat(std::span<const double> params);
  friend bool operator==(const Adapter&, const Adapter&) = default;
};

// He-style normal init for weights, zero biases.
Adapter make_adapter(int in_dim, int hidden_dim, int out_dim, std::uint64_t seed);
Adapter zero_adapter(int in_dim, int hidden_dim, int out_dim);

std::vector<double> adapter_forward(const Adapter& adapter, std::span<const double> x);

struct AdapterTrace {
  std::vector<double> pre;  // W1 x + b1
  std::vector<double> out;
};
AdapterTrace adapter_forward_trace(const Adapter& adapter, std::span<const double> x);

// Accumulates d(loss)/d(params) into `grad` (flat layout) given dL/dy.
void adapter_backward(const Adapter& adapter, std::span<const double> x, const AdapterTrace& trace,
                      std::span<const double> grad_out, std::span<double> grad);

// Binary checkpoint: "MMVMADPT", u32 version, u32 in/hidden/out, u64 seed,
// u64 steps, f64 parameters (little-endian), 32-byte SHA-256 of all
// preceding bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::string serialize_adapter(const Adapter& adapter);
Adapter parse_adapter(std::string_view bytes);
void save_adapter(const std::filesystem::path& path, const Adapter& adapter);
Adapter load_adapter(const std::filesystem::path& path);

std::string adapter_hash(const Adapter& adapter);

}  // namespace mmvm::ocl
