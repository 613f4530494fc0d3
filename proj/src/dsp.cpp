#include "pcg/dsp.hpp"

#include <cmath>

namespace pcg {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n < 2) return;
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& v : a) v /= static_cast<double>(n);
}

std::vector<double> analytic_magnitude(const std::vector<double>& x) {
    const std::size_t n = x.size();
    const std::size_t m = next_pow2(n);
    std::vector<std::complex<double>> buf(m, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) buf[i] = {x[i], 0.0};
    fft(buf, false);
    // analytic spectrum: double positive frequencies, zero negative ones
    for (std::size_t k = 1; k < m / 2; ++k) buf[k] *= 2.0;
    for (std::size_t k = m / 2 + 1; k < m; ++k) buf[k] = {0.0, 0.0};
    fft(buf, true);
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(buf[i]);
    return mag;
}

std::vector<double> one_pole_lowpass(const std::vector<double>& x, double cutoff_hz,
                                     double rate_hz) {
    std::vector<double> y(x.size());
    if (x.empty()) return y;
    const double alpha = 1.0 - std::exp(-2.0 * kPi * cutoff_hz / rate_hz);
    y[0] = x[0];
    for (std::size_t i = 1; i < x.size(); ++i) y[i] = y[i - 1] + alpha * (x[i] - y[i - 1]);
    return y;
}

std::vector<double> welch_psd(const std::vector<double>& x, std::size_t nfft, double rate_hz) {
    std::vector<double> window(nfft);
    double wpow = 0.0;
    for (std::size_t i = 0; i < nfft; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (nfft - 1)));
        wpow += window[i] * window[i];
    }

    const std::size_t hop = nfft / 2;
    std::size_t n_segs = x.size() >= nfft ? 1 + (x.size() - nfft) / hop : 1;

    std::vector<double> psd(nfft / 2 + 1, 0.0);
    std::vector<std::complex<double>> buf(nfft);
    for (std::size_t s = 0; s < n_segs; ++s) {
        const std::size_t start = s * hop;
        for (std::size_t i = 0; i < nfft; ++i) {
            const double v = (start + i < x.size()) ? x[start + i] : 0.0;
            buf[i] = {v * window[i], 0.0};
        }
        fft(buf, false);
        for (std::size_t k = 0; k <= nfft / 2; ++k) {
            const double scale = (k == 0 || k == nfft / 2) ? 1.0 : 2.0; // one-sided
            psd[k] += scale * std::norm(buf[k]);
        }
    }
    const double norm = 1.0 / (static_cast<double>(n_segs) * wpow * rate_hz);
    for (auto& v : psd) v *= norm;
    return psd;
}

} // namespace pcg
