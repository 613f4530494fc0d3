#include "pcg/mel.hpp"
#include "pcg/dsp.hpp"
#include "pcg/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>

namespace pcg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLogFloor = 1e-10;
constexpr double kStdFloor = 1e-6;

struct MelBank {
    std::size_t nfft;
    std::vector<std::vector<double>> weights; // [mel][bin]
};

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

const MelBank& get_bank(std::size_t nfft, double rate, double fmin, double fmax) {
    static std::map<std::tuple<std::size_t, double, double, double>, MelBank> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_tuple(nfft, rate, fmin, fmax);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    MelBank bank;
    bank.nfft = nfft;
    const double mlo = hz_to_mel(fmin), mhi = hz_to_mel(fmax);
    std::vector<double> edges(kMelBins + 2);
    for (int i = 0; i < kMelBins + 2; ++i)
        edges[i] = mel_to_hz(mlo + (mhi - mlo) * i / (kMelBins + 1));
    bank.weights.assign(kMelBins, std::vector<double>(nfft / 2 + 1, 0.0));
    for (int m = 0; m < kMelBins; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (std::size_t k = 0; k <= nfft / 2; ++k) {
            const double f = k * rate / static_cast<double>(nfft);
            if (f > lo && f < mid) bank.weights[m][k] = (f - lo) / std::max(mid - lo, 1e-12);
            else if (f >= mid && f < hi) bank.weights[m][k] = (hi - f) / std::max(hi - mid, 1e-12);
        }
    }
    return cache.emplace(key, std::move(bank)).first->second;
}

} // namespace

MelSpectrogram standardize(const MelSpectrogram& spec) {
    MelSpectrogram out = spec;
    // anchored summation keeps the mean exact for constant grids, so the
    // std floor maps silence to exact zeros
    const double anchor = out.grid.empty() ? 0.0 : out.grid[0];
    double mean = 0.0;
    for (double v : out.grid) mean += v - anchor;
    mean = anchor + mean / static_cast<double>(out.grid.size());
    double var = 0.0;
    for (double v : out.grid) var += (v - mean) * (v - mean);
    var /= static_cast<double>(out.grid.size());
    const double sd = std::max(std::sqrt(var), kStdFloor);
    for (auto& v : out.grid) v = (v - mean) / sd;
    out.norm_mean = mean;
    out.norm_std = sd;
    return out;
}

MelSpectrogram log_mel(const PcgRecording& rec, const MelConfig& config, Rng& rng) {
    const double rate = rec.sample_rate_hz;
    const std::size_t win = static_cast<std::size_t>(std::llround(config.window_s * rate));
    const std::size_t hop = static_cast<std::size_t>(std::llround(config.hop_s * rate));
    const std::size_t nfft = next_pow2(win);

    // need at least 96 frames: pad by replication first
    const double min_seconds = config.window_s + (kMelFrames - 1) * config.hop_s;
    PcgRecording padded = pad_by_replication(rec, min_seconds);
    const auto& x = padded.samples;

    const std::size_t n_frames = (x.size() - win) / hop + 1;
    const auto& bank = get_bank(nfft, rate, config.fmin_hz, 0.45 * rate);

    std::vector<double> window(win);
    for (std::size_t i = 0; i < win; ++i)
        window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (win - 1)));

    // crop in frame units before computing: only 96 frames are needed
    std::size_t start_frame = 0;
    if (n_frames > kMelFrames) {
        if (config.random_crop)
            start_frame = rng.uniform_index(n_frames - kMelFrames + 1);
        else
            start_frame = (n_frames - kMelFrames) / 2;
    }

    MelSpectrogram spec;
    spec.rate_hz = rate;
    std::vector<std::complex<double>> buf(nfft);
    for (int t = 0; t < kMelFrames; ++t) {
        const std::size_t start = (start_frame + t) * hop;
        for (std::size_t i = 0; i < nfft; ++i) {
            const double v = (i < win && start + i < x.size()) ? x[start + i] * window[i] : 0.0;
            buf[i] = {v, 0.0};
        }
        fft(buf, false);
        for (int m = 0; m < kMelBins; ++m) {
            double e = 0.0;
            for (std::size_t k = 0; k <= nfft / 2; ++k)
                e += bank.weights[m][k] * std::norm(buf[k]);
            spec.at(t, m) = std::log(e + kLogFloor);
        }
    }
    return standardize(spec);
}

MelSpectrogram pitch_shift(const MelSpectrogram& spec, int shift_bins, int max_shift) {
    if (std::abs(shift_bins) > max_shift)
        throw PcgError("ShiftTooLarge", std::to_string(shift_bins));
    const double fill = *std::min_element(spec.grid.begin(), spec.grid.end());
    MelSpectrogram out = spec;
    for (int t = 0; t < kMelFrames; ++t)
        for (int m = 0; m < kMelBins; ++m) {
            const int src = m - shift_bins;
            out.at(t, m) = (src >= 0 && src < kMelBins) ? spec.at(t, src) : fill;
        }
    return out;
}

MelSpectrogram time_stretch(const MelSpectrogram& spec, double factor) {
    if (factor < 0.6 || factor > 1.5)
        throw PcgError("FactorOutOfRange", std::to_string(factor));
    const int stretched = static_cast<int>(std::llround(kMelFrames / factor));

    // linear interpolation along time onto `stretched` frames
    std::vector<double> tmp(static_cast<std::size_t>(stretched) * kMelBins);
    for (int t = 0; t < stretched; ++t) {
        const double src = stretched > 1
                               ? static_cast<double>(t) * (kMelFrames - 1) / (stretched - 1)
                               : 0.0;
        const int lo = static_cast<int>(std::floor(src));
        const int hi = std::min(lo + 1, kMelFrames - 1);
        const double frac = src - lo;
        for (int m = 0; m < kMelBins; ++m)
            tmp[t * kMelBins + m] = (1.0 - frac) * spec.at(lo, m) + frac * spec.at(hi, m);
    }

    MelSpectrogram out = spec;
    if (stretched >= kMelFrames) {
        const int off = (stretched - kMelFrames) / 2; // center crop
        for (int t = 0; t < kMelFrames; ++t)
            for (int m = 0; m < kMelBins; ++m) out.at(t, m) = tmp[(t + off) * kMelBins + m];
    } else {
        for (int t = 0; t < kMelFrames; ++t) {
            const int src = std::min(t, stretched - 1); // replicate last frame
            for (int m = 0; m < kMelBins; ++m) out.at(t, m) = tmp[src * kMelBins + m];
        }
    }
    return out;
}

std::pair<MelSpectrogram, MelSpectrogram> make_views(const MelSpectrogram& spec,
                                                     const AugmentRanges& ranges, Rng& rng) {
    auto one_view = [&]() {
        const double factor = ranges.stretch_hi > ranges.stretch_lo
                                  ? rng.uniform(ranges.stretch_lo, ranges.stretch_hi)
                                  : ranges.stretch_lo;
        const int shift = ranges.max_pitch_shift > 0
                              ? rng.uniform_int(-ranges.max_pitch_shift, ranges.max_pitch_shift)
                              : 0;
        MelSpectrogram v = spec;
        if (factor != 1.0) v = time_stretch(v, factor);
        if (shift != 0) v = pitch_shift(v, shift, ranges.max_pitch_shift);
        return standardize(v);
    };
    auto v1 = one_view();
    auto v2 = one_view();
    return {std::move(v1), std::move(v2)};
}

void write_mel_blob(const MelSpectrogram& spec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    for (double v : spec.grid) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
}

void write_mel_csv(const MelSpectrogram& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    out.precision(17);
    for (int t = 0; t < kMelFrames; ++t) {
        for (int m = 0; m < kMelBins; ++m) out << (m ? "," : "") << spec.at(t, m);
        out << "\n";
    }
}

} // namespace pcg
