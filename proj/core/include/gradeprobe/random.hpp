#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace gradeprobe {

// mt19937_64 output is fully specified by the standard, so every draw below is
// reproducible across standard libraries (the <random> distributions are not).
using Rng = std::mt19937_64;

// splitmix64 mix of (base, stream); used to give each run / episode its own stream.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

// 53-bit uniform in [0, 1).
[[nodiscard]] double uniform01(Rng& rng);

// Uniform integer in [0, n); n must be positive.
[[nodiscard]] std::size_t uniform_index(Rng& rng, std::size_t n);

// Inverse-CDF draw from a probability vector. Consumes exactly one uniform01.
[[nodiscard]] std::size_t sample_action(std::span<const double> probs, Rng& rng);

// Highest-probability index; ties go to the lowest index.
[[nodiscard]] std::size_t argmax_action(std::span<const double> probs);

} // namespace gradeprobe
