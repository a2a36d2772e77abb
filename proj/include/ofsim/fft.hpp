#pragma once

#include <cstddef>
#include <span>

#include "ofsim/common.hpp"

namespace ofsim::fft {

/// Forward DFT in place, X[k] = sum_n x[n] exp(-j 2 pi k n / N).
void forward(std::span<Complex> data);

/// Inverse DFT in place including the 1/N factor.
void inverse(std::span<Complex> data);

CVec forward_copy(const CVec& data);
CVec inverse_copy(const CVec& data);

/// Signed bin index of bin k (range [-n/2, n/2) for even n).
inline std::ptrdiff_t signed_bin(std::size_t k, std::size_t n)
{
    auto kk = static_cast<std::ptrdiff_t>(k);
    if (kk >= (static_cast<std::ptrdiff_t>(n) + 1) / 2) kk -= static_cast<std::ptrdiff_t>(n);
    return kk;
}

/// Signed frequency of bin k for an n-point transform at sample rate fs.
inline double bin_frequency(std::size_t k, std::size_t n, double fs)
{
    return static_cast<double>(signed_bin(k, n)) * fs / static_cast<double>(n);
}

/// Storage index of a signed bin.
inline std::size_t wrap_bin(std::ptrdiff_t k, std::size_t n)
{
    const auto nn = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((k % nn) + nn) % nn);
}

}  // namespace ofsim::fft
