#pragma once

#include <complex>
#include <span>
#include <vector>

namespace dbf::detail {

/// In-place forward or inverse DFT of arbitrary length backed by FFTW.
/// Unnormalized in both directions. Safe to call from several threads.
void fft(std::span<std::complex<double>> data, bool inverse);

/// Smallest power of two >= n.
std::size_t fft_size_for(std::size_t n);

}  // namespace dbf::detail
