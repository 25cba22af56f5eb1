#include "ggadmm/compression.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>

#include "ggadmm/errors.hpp"

namespace ggadmm {

namespace {

constexpr double kFirstRangeFloor = 1e-12;
constexpr std::uint8_t kPayloadMagic = 0x51;
constexpr std::uint8_t kModelMagic = 0x44;
constexpr std::uint8_t kVersion = 0x01;

double levels(int bits) {
  return static_cast<double>((std::uint64_t{1} << bits) - 1);
}

void check_bits(int bits) {
  if (bits < 1 || bits > 32) throw InvalidArgument("bit-width must be in [1, 32]");
}

// Rounds up to the nearest binary32 value so the wire-encoded range still
// covers every coordinate.
double round_range_up(double range) {
  auto f = static_cast<float>(range);
  if (static_cast<double>(f) < range) f = std::nextafterf(f, std::numeric_limits<float>::max());
  if (f <= 0.0f) f = std::nextafterf(0.0f, 1.0f);
  if (!std::isfinite(f)) throw InvalidArgument("quantization range overflowed binary32");
  return static_cast<double>(f);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[offset + i]} << (8 * i);
  return v;
}

}  // namespace

QuantizerState initial_quantizer_state(Eigen::Index dim, int init_bits, double omega) {
  check_bits(init_bits);
  if (!(omega > 0.0 && omega < 1.0)) throw InvalidArgument("omega must be in (0, 1)");
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  QuantizerState s;
  s.prev_reconstruction = ModelVector::Zero(dim);
  s.prev_bits = init_bits;
  s.omega = omega;
  return s;
}

int select_bits(const QuantizerState& state, double new_range) {
  if (!(new_range > 0.0)) throw InvalidArgument("new_range must be positive");
  if (!(state.prev_range > 0.0) || !(state.prev_step > 0.0))
    throw InvalidArgument("select_bits needs a completed previous quantization");
  check_bits(state.prev_bits);

  // Smallest b with 2*new_range/(2^b - 1) <= omega * prev_step. The log2 form
  // of that condition seeds the search; the loops settle boundary cases with
  // the direct comparison so roundoff in the logarithm cannot leak a step
  // above the budget.
  const double target = state.omega * state.prev_step;
  const double arg = 1.0 + levels(state.prev_bits) * new_range / (state.omega * state.prev_range);
  const double raw = std::ceil(std::log2(arg));
  int bits = raw > 33.0 ? 33 : std::max(1, static_cast<int>(raw));
  while (bits > 1 && 2.0 * new_range / levels(bits - 1) <= target) --bits;
  while (bits <= 32 && 2.0 * new_range / levels(bits) > target) ++bits;
  if (bits > 32)
    throw BitBudgetExceeded(
        "step-size law needs more than 32 bits; omega too aggressive for the range trajectory");
  return bits;
}

QuantizeResult quantize(const ModelVector& theta, const QuantizerState& state,
                        const rng::KeyedStream& stream) {
  if (theta.size() != state.prev_reconstruction.size())
    throw DimensionMismatch("model dimension does not match quantizer state");

  const double deviation = (theta - state.prev_reconstruction).lpNorm<Eigen::Infinity>();
  // The floor decays with the step-size law so an idle range trajectory
  // keeps the ratio at omega instead of pinning it at 1 (which would force
  // the bit-width up every iteration). Rounded toward zero in binary32 so
  // the wire value stays at or below omega * prev_range.
  double floor = kFirstRangeFloor;
  const bool first = !(state.prev_range > 0.0);
  if (!first) {
    const double decayed = state.omega * state.prev_range;
    auto f = static_cast<float>(decayed);
    if (static_cast<double>(f) > decayed) f = std::nextafterf(f, 0.0f);
    if (f <= 0.0f) f = std::nextafterf(0.0f, 1.0f);
    floor = static_cast<double>(f);
  }
  const double range = round_range_up(std::max(deviation, floor));
  const int bits = first ? state.prev_bits : select_bits(state, range);
  return quantize_with(theta, state, range, bits, stream);
}

QuantizeResult quantize_with(const ModelVector& theta, const QuantizerState& state, double range,
                             int bits, const rng::KeyedStream& stream) {
  if (theta.size() != state.prev_reconstruction.size())
    throw DimensionMismatch("model dimension does not match quantizer state");
  check_bits(bits);
  if (!(range > 0.0)) throw InvalidArgument("range must be positive");

  const double n_levels = levels(bits);
  const double step = 2.0 * range / n_levels;
  const ModelVector& prev = state.prev_reconstruction;

  QuantizeResult result;
  result.payload.range = range;
  result.payload.bits = bits;
  result.payload.codes.resize(static_cast<std::size_t>(theta.size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double centered = (theta[i] - prev[i] + range) / step;
    double lower = std::floor(centered);
    const double p = centered - lower;
    double code = lower + (stream.uniform(static_cast<std::uint64_t>(i)) < p ? 1.0 : 0.0);
    if (code < 0.0) code = 0.0;
    if (code > n_levels) code = n_levels;
    result.payload.codes[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(code);
  }

  result.reconstruction = reconstruct(result.payload, prev);
  result.state.prev_reconstruction = result.reconstruction;
  result.state.prev_range = range;
  result.state.prev_bits = bits;
  result.state.prev_step = step;
  result.state.omega = state.omega;
  return result;
}

ModelVector reconstruct(const QuantizedPayload& payload, const ModelVector& prev_reconstruction) {
  check_bits(payload.bits);
  if (static_cast<Eigen::Index>(payload.codes.size()) != prev_reconstruction.size())
    throw DimensionMismatch("payload dimension does not match previous reconstruction");
  const double n_levels = levels(payload.bits);
  const double step = 2.0 * payload.range / n_levels;

  ModelVector out(prev_reconstruction.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const std::uint32_t code = payload.codes[static_cast<std::size_t>(i)];
    if (static_cast<double>(code) > n_levels)
      throw CodeOutOfRange("code " + std::to_string(code) + " exceeds " +
                           std::to_string(payload.bits) + "-bit level count");
    out[i] = prev_reconstruction[i] + step * static_cast<double>(code) - payload.range;
  }
  return out;
}

long long payload_bits(const QuantizedPayload& payload, int range_bits, int bits_bits) {
  check_bits(payload.bits);
  if (range_bits < 0 || range_bits > 32 || bits_bits < 0 || bits_bits > 32)
    throw InvalidArgument("side-information widths must be in [0, 32]");
  return static_cast<long long>(payload.bits) * static_cast<long long>(payload.codes.size()) +
         range_bits + bits_bits;
}

long long full_precision_bits(Eigen::Index dim) { return 32ll * static_cast<long long>(dim); }

bool censor_decide(const ModelVector& last_sent, const ModelVector& candidate, long k,
                   const CensorPolicy& policy) {
  if (last_sent.size() != candidate.size())
    throw DimensionMismatch("censoring inputs differ in dimension");
  if (k < 0) throw InvalidArgument("iteration index must be nonnegative");
  if (!(policy.tau0 > 0.0)) throw InvalidArgument("tau0 must be positive");
  if (!(policy.xi > 0.0 && policy.xi < 1.0)) throw InvalidArgument("xi must be in (0, 1)");
  const double threshold = policy.tau0 * std::pow(policy.xi, static_cast<double>(k) + 1.0);
  return (candidate - last_sent).norm() >= threshold;
}

std::vector<std::uint8_t> serialize(const QuantizedPayload& payload) {
  check_bits(payload.bits);
  const auto range32 = static_cast<float>(payload.range);
  if (static_cast<double>(range32) != payload.range || !(range32 > 0.0f))
    throw InvalidArgument("payload range must be a positive binary32 value");
  const double n_levels = levels(payload.bits);
  for (const std::uint32_t code : payload.codes)
    if (static_cast<double>(code) > n_levels)
      throw CodeOutOfRange("code " + std::to_string(code) + " exceeds level count");

  const std::size_t d = payload.codes.size();
  const std::size_t code_bytes = (d * static_cast<std::size_t>(payload.bits) + 7) / 8;
  std::vector<std::uint8_t> out;
  out.reserve(11 + code_bytes);
  out.push_back(kPayloadMagic);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(payload.bits));
  put_u32(out, static_cast<std::uint32_t>(d));
  std::uint32_t range_bits = 0;
  std::memcpy(&range_bits, &range32, 4);
  put_u32(out, range_bits);

  out.resize(11 + code_bytes, 0);
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint64_t code = payload.codes[i];
    for (int j = 0; j < payload.bits; ++j) {
      const std::size_t bit = i * static_cast<std::size_t>(payload.bits) + j;
      out[11 + bit / 8] |= static_cast<std::uint8_t>(((code >> j) & 1u) << (bit % 8));
    }
  }
  return out;
}

QuantizedPayload deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 11) throw MalformedPayload("frame shorter than the 11-byte header");
  if (bytes[0] != kPayloadMagic) throw MalformedPayload("bad magic byte");
  if (bytes[1] != kVersion) throw MalformedPayload("unsupported version");
  const int bits = bytes[2];
  if (bits < 1 || bits > 32) throw MalformedPayload("bit-width out of [1, 32]");
  const std::size_t d = get_u32(bytes, 3);

  const std::size_t code_bytes = (d * static_cast<std::size_t>(bits) + 7) / 8;
  if (bytes.size() != 11 + code_bytes)
    throw MalformedPayload("frame length does not match the declared dimension");

  std::uint32_t range_bits = get_u32(bytes, 7);
  float range32 = 0.0f;
  std::memcpy(&range32, &range_bits, 4);
  if (!(range32 > 0.0f) || !std::isfinite(range32))
    throw MalformedPayload("range must be positive and finite");

  QuantizedPayload payload;
  payload.bits = bits;
  payload.range = static_cast<double>(range32);
  payload.codes.assign(d, 0);
  for (std::size_t i = 0; i < d; ++i) {
    std::uint64_t code = 0;
    for (int j = 0; j < bits; ++j) {
      const std::size_t bit = i * static_cast<std::size_t>(bits) + j;
      code |= static_cast<std::uint64_t>((bytes[11 + bit / 8] >> (bit % 8)) & 1u) << j;
    }
    payload.codes[i] = static_cast<std::uint32_t>(code);
  }
  for (std::size_t bit = d * static_cast<std::size_t>(bits); bit < code_bytes * 8; ++bit)
    if ((bytes[11 + bit / 8] >> (bit % 8)) & 1u)
      throw MalformedPayload("nonzero padding bits");
  return payload;
}

std::vector<std::uint8_t> serialize_model(const ModelVector& value) {
  std::vector<std::uint8_t> out;
  out.reserve(6 + 8 * static_cast<std::size_t>(value.size()));
  out.push_back(kModelMagic);
  out.push_back(kVersion);
  put_u32(out, static_cast<std::uint32_t>(value.size()));
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    std::uint64_t word = 0;
    std::memcpy(&word, &value[i], 8);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(word >> (8 * b)));
  }
  return out;
}

ModelVector deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6) throw MalformedPayload("frame shorter than the 6-byte header");
  if (bytes[0] != kModelMagic) throw MalformedPayload("bad magic byte");
  if (bytes[1] != kVersion) throw MalformedPayload("unsupported version");
  const std::size_t d = get_u32(bytes, 2);
  if (bytes.size() != 6 + 8 * d)
    throw MalformedPayload("frame length does not match the declared dimension");
  ModelVector out(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    std::uint64_t word = 0;
    for (int b = 0; b < 8; ++b) word |= std::uint64_t{bytes[6 + 8 * i + b]} << (8 * b);
    std::memcpy(&out[static_cast<Eigen::Index>(i)], &word, 8);
  }
  return out;
}

TotalErrorBoundParams total_error_bound_params(const CensorPolicy& policy, double omega,
                                               Eigen::Index dim, double delta0) {
  if (!(policy.xi > 0.0 && policy.xi < 1.0) || !(omega > 0.0 && omega < 1.0))
    throw InvalidArgument("xi and omega must be in (0, 1)");
  if (dim < 1 || !(delta0 >= 0.0)) throw InvalidArgument("need dim >= 1 and delta0 >= 0");
  return {std::max(policy.tau0, std::sqrt(static_cast<double>(dim)) * delta0),
          std::max(policy.xi, omega)};
}

double total_error_bound(const TotalErrorBoundParams& params, long k) {
  if (k < 0) throw InvalidArgument("iteration index must be nonnegative");
  return 4.0 * params.c0 * params.c0 * std::pow(params.psi, 2.0 * static_cast<double>(k));
}

}  // namespace ggadmm
