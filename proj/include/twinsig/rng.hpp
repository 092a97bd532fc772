#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace twinsig {

/// 64-bit FNV-1a over the label bytes.
std::uint64_t fnv1a64(std::string_view label);

/// SplitMix64 finalizer; decorrelates nearby seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for an independent random stream: splitmix64(root ^ fnv1a64(label)).
/// Adding a new labelled stream never perturbs existing ones.
std::uint64_t stream_seed(std::uint64_t root, std::string_view label);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
/// Spelled out (rather than std::generate_canonical) so the stream can be
/// replayed bit-for-bit outside C++.
inline double unit_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace twinsig
