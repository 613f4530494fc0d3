#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace pcg {

// In-place iterative radix-2 FFT; data.size() must be a power of two.
void fft(std::vector<std::complex<double>>& data, bool inverse);

std::size_t next_pow2(std::size_t n);

// Magnitude of the analytic signal (FFT-based Hilbert transform).
std::vector<double> analytic_magnitude(const std::vector<double>& x);

// One-pole low-pass, forward pass, y[0] initialized to x[0].
std::vector<double> one_pole_lowpass(const std::vector<double>& x, double cutoff_hz,
                                     double rate_hz);

// Welch PSD: Hann window of nfft samples, 50% overlap; signals shorter than
// nfft are zero-padded into a single segment. Returns nfft/2+1 one-sided
// power values; bin k maps to frequency k * rate / nfft.
std::vector<double> welch_psd(const std::vector<double>& x, std::size_t nfft, double rate_hz);

} // namespace pcg
