#include "ocl/adapter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/rng.hpp"

namespace mmvm::ocl {

namespace {

// NaN passes through so the training guard sees it.
double relu(double v) { return v < 0 ? 0.0 : v; }

}  // namespace


static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::vector<double> Adapter::flat() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto* v : {&w1, &b1, &w2, &b2}) out.insert(out.end(), v->begin(), v->end());
  return out;
}

void Adapter::set_flat(std::span<const double> params) {
  if (params.size() != parameter_count()) throw InvalidArgument("parameter count mismatch");
  std::size_t off = 0;
  for (auto* v : {&w1, &b1, &w2, &b2}) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(off), v->size(), v->begin());
    off += v->size();
  }
}

Adapter zero_adapter(int in_dim, int hidden_dim, int out_dim) {
  if (in_dim < 1 || hidden_dim < 1 || out_dim < 1) throw InvalidArgument("adapter dimensions must be positive");
  Adapter a;
  a.in_dim = in_dim;
  a.hidden_dim = hidden_dim;
  a.out_dim = out_dim;
  a.w1.assign(static_cast<std::size_t>(hidden_dim) * in_dim, 0.0);
  a.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
  a.w2.assign(static_cast<std::size_t>(out_dim) * hidden_dim, 0.0);
  a.b2.assign(static_cast<std::size_t>(out_dim), 0.0);
  return a;
}

Adapter make_adapter(int in_dim, int hidden_dim, int out_dim, std::uint64_t seed) {
  Adapter a = zero_adapter(in_dim, hidden_dim, out_dim);
  a.seed = seed;
  Rng rng(seed);
  const double s1 = std::sqrt(2.0 / in_dim);
  const double s2 = std::sqrt(2.0 / hidden_dim);
  for (double& w : a.w1) w = rng.normal() * s1;
  for (double& w : a.w2) w = rng.normal() * s2;
  return a;
}

AdapterTrace adapter_forward_trace(const Adapter& a, std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.in_dim) throw InvalidArgument("adapter input dimension mismatch");
  AdapterTrace t;
  t.pre.assign(static_cast<std::size_t>(a.hidden_dim), 0.0);
  for (int h = 0; h < a.hidden_dim; ++h) {
    double z = a.b1[static_cast<std::size_t>(h)];
    const double* w = a.w1.data() + static_cast<std::size_t>(h) * a.in_dim;
    for (int i = 0; i < a.in_dim; ++i) z += w[i] * x[static_cast<std::size_t>(i)];
    t.pre[static_cast<std::size_t>(h)] = z;
  }
  t.out.assign(static_cast<std::size_t>(a.out_dim), 0.0);
  for (int o = 0; o < a.out_dim; ++o) {
    double z = a.b2[static_cast<std::size_t>(o)];
    const double* w = a.w2.data() + static_cast<std::size_t>(o) * a.hidden_dim;
    for (int h = 0; h < a.hidden_dim; ++h) z += w[h] * relu(t.pre[static_cast<std::size_t>(h)]);
    t.out[static_cast<std::size_t>(o)] = z;
  }
  return t;
}

std::vector<double> adapter_forward(const Adapter& adapter, std::span<const double> x) {
  return adapter_forward_trace(adapter, x).out;
}

void adapter_backward(const Adapter& a, std::span<const double> x, const AdapterTrace& t,
                      std::span<const double> grad_out, std::span<double> grad) {
  if (grad.size() != a.parameter_count() || static_cast<int>(grad_out.size()) != a.out_dim) {
    throw InvalidArgument("gradient buffer size mismatch");
  }
  double* gw1 = grad.data();
  double* gb1 = gw1 + a.w1.size();
  double* gw2 = gb1 + a.b1.size();
  double* gb2 = gw2 + a.w2.size();
  std::vector<double> gh(static_cast<std::size_t>(a.hidden_dim), 0.0);
  for (int o = 0; o < a.out_dim; ++o) {
    const double g = grad_out[static_cast<std::size_t>(o)];
    gb2[o] += g;
    const double* w = a.w2.data() + static_cast<std::size_t>(o) * a.hidden_dim;
    double* gw = gw2 + static_cast<std::size_t>(o) * a.hidden_dim;
    for (int h = 0; h < a.hidden_dim; ++h) {
      gw[h] += g * relu(t.pre[static_cast<std::size_t>(h)]);
      gh[static_cast<std::size_t>(h)] += g * w[h];
    }
  }
  for (int h = 0; h < a.hidden_dim; ++h) {
    if (t.pre[static_cast<std::size_t>(h)] <= 0) continue;
    const double g = gh[static_cast<std::size_t>(h)];
    gb1[h] += g;
    double* gw = gw1 + static_cast<std::size_t>(h) * a.in_dim;
    for (int i = 0; i < a.in_dim; ++i) gw[i] += g * x[static_cast<std::size_t>(i)];
  }
}

namespace {

constexpr char kMagic[8] = {'M', 'M', 'V', 'M', 'A', 'D', 'P', 'T'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& off) {
  if (off + sizeof(T) > bytes.size()) throw ParseError("adapter checkpoint truncated");
  T v;
  std::memcpy(&v, bytes.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

std::string hex_to_bytes(const std::string& hex) {
  std::string out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

}  // namespace

std::string serialize_adapter(const Adapter& a) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(a.in_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(a.hidden_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(a.out_dim));
  put<std::uint64_t>(out, a.seed);
  put<std::uint64_t>(out, a.steps);
  for (double v : a.flat()) put<double>(out, v);
  out += hex_to_bytes(sha256_hex(std::string_view(out)));
  return out;
}

Adapter parse_adapter(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic + 32 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw ParseError("not an adapter checkpoint");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 32);
  if (hex_to_bytes(sha256_hex(body)) != bytes.substr(bytes.size() - 32)) {
    throw ParseError("adapter checkpoint hash mismatch");
  }
  std::size_t off = sizeof kMagic;
  const auto version = take<std::uint32_t>(body, off);
  if (version != kCheckpointVersion) throw ParseError("unsupported adapter checkpoint version " + std::to_string(version));
  const auto in = take<std::uint32_t>(body, off);
  const auto hidden = take<std::uint32_t>(body, off);
  const auto out = take<std::uint32_t>(body, off);
  if (in == 0 || hidden == 0 || out == 0 || in > (1u << 16) || hidden > (1u << 16) || out > (1u << 16)) {
    throw ParseError("adapter checkpoint has invalid dimensions");
  }
  Adapter a = zero_adapter(static_cast<int>(in), static_cast<int>(hidden), static_cast<int>(out));
  a.seed = take<std::uint64_t>(body, off);
  a.steps = take<std::uint64_t>(body, off);
  if (body.size() - off != a.parameter_count() * sizeof(double)) throw ParseError("adapter checkpoint size mismatch");
  std::vector<double> params(a.parameter_count());
  for (double& v : params) v = take<double>(body, off);
  a.set_flat(params);
  return a;
}

void save_adapter(const std::filesystem::path& path, const Adapter& adapter) {
  write_file(path, serialize_adapter(adapter));
}

Adapter load_adapter(const std::filesystem::path& path) { return parse_adapter(read_file(path)); }

std::string adapter_hash(const Adapter& adapter) { return sha256_hex(std::string_view(serialize_adapter(adapter))); }

}  // namespace mmvm::ocl
