#pragma once

#include <span>

#include "specsense/core.hpp"

namespace specsense {

/// Unnormalized forward DFT: out[m] = sum_n in[n] e^{-2 pi j n m / N}.
/// Plans are cached per length; execution is thread-safe.
void fft_forward(std::span<const Complex> in, std::span<Complex> out);

/// Unnormalized inverse DFT (no 1/N factor).
void fft_inverse(std::span<const Complex> in, std::span<Complex> out);

}  // namespace specsense
