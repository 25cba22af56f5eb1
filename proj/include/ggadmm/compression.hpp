#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ggadmm/objectives.hpp"
#include "ggadmm/rng.hpp"

namespace ggadmm {

// Differential stochastic quantizer state. prev_reconstruction is the last
// reconstruction both sides of a link agree on (the zero vector before the
// first transmission); prev_range/prev_bits/prev_step describe the previous
// quantization and satisfy prev_step = 2*prev_range/(2^prev_bits - 1) once a
// quantization has happened (prev_range == 0 marks the initial state, where
// prev_bits holds the configured starting bit-width).
struct QuantizerState {
  ModelVector prev_reconstruction;
  double prev_range = 0.0;
  int prev_bits = 2;
  double prev_step = 0.0;
  double omega = 0.97;
};

QuantizerState initial_quantizer_state(Eigen::Index dim, int init_bits, double omega);

// One transmission unit: integer codes plus the range/bit-width needed to
// reconstruct. range is always exactly representable in IEEE-754 binary32
// (the wire stores it that way).
struct QuantizedPayload {
  std::vector<std::uint32_t> codes;
  double range = 0.0;
  int bits = 1;
};

struct QuantizeResult {
  QuantizedPayload payload;
  ModelVector reconstruction;
  QuantizerState state;  // caller commits all of it (transmit) or only the
                         // range/bits/step chain (censored)
};

// Smallest bit-width keeping the step non-increasing by factor omega:
//   b = max(1, ceil(log2(1 + (2^prev_bits - 1) * new_range / (omega * prev_range))))
// Throws BitBudgetExceeded past 32 bits.
int select_bits(const QuantizerState& state, double new_range);

// Full pipeline: pick the range (max of the coordinate-wise deviation from
// prev_reconstruction and the decaying floor omega*prev_range, rounded up to
// binary32), pick bits, then stochastically round each coordinate so the
// reconstruction is unbiased. One uniform draw per coordinate from the
// stream, keyed by coordinate index.
QuantizeResult quantize(const ModelVector& theta, const QuantizerState& state,
                        const rng::KeyedStream& stream);

// Same with the range and bit-width pinned by the caller. Every coordinate
// of theta must lie within +-range of prev_reconstruction.
QuantizeResult quantize_with(const ModelVector& theta, const QuantizerState& state, double range,
                             int bits, const rng::KeyedStream& stream);

// Receiver side: prev + step*codes - range. Bit-identical to the sender's
// reconstruction for identical inputs.
ModelVector reconstruct(const QuantizedPayload& payload, const ModelVector& prev_reconstruction);

// Accounting size in bits: bits*d + range_bits + bits_bits. Independent of
// the framed wire length.
long long payload_bits(const QuantizedPayload& payload, int range_bits = 32, int bits_bits = 32);

// Bits accounted for one full-precision model transmission.
long long full_precision_bits(Eigen::Index dim);

// Decaying transmit threshold tau0 * xi^(k+1).
struct CensorPolicy {
  double tau0 = 1.0;
  double xi = 0.97;
};

// True when the candidate differs from the last transmitted value by at
// least the iteration-k threshold. The caller promotes the candidate into
// last_sent on true and keeps last_sent otherwise.
bool censor_decide(const ModelVector& last_sent, const ModelVector& candidate, long k,
                   const CensorPolicy& policy);

// Wire format (little-endian): magic 0x51, version 0x01, bits u8, dim u32,
// range binary32, then ceil(dim*bits/8) bytes of codes packed LSB-first in
// ascending coordinate order, final byte zero-padded.
std::vector<std::uint8_t> serialize(const QuantizedPayload& payload);
QuantizedPayload deserialize(std::span<const std::uint8_t> bytes);

// Full-precision frame for the uncompressed variants: magic 0x44, version
// 0x01, dim u32, then dim binary64 values. Round-trips doubles exactly.
std::vector<std::uint8_t> serialize_model(const ModelVector& value);
ModelVector deserialize_model(std::span<const std::uint8_t> bytes);

// Combined censoring+quantization error envelope: E||eps^k||^2 <= 4 C0^2 psi^(2k)
// with C0 = max(tau0, sqrt(d)*delta0) and psi = max(xi, omega).
struct TotalErrorBoundParams {
  double c0 = 0.0;
  double psi = 0.0;
};

TotalErrorBoundParams total_error_bound_params(const CensorPolicy& policy, double omega,
                                               Eigen::Index dim, double delta0);
double total_error_bound(const TotalErrorBoundParams& params, long k);

}  // namespace ggadmm
