#pragma once

#include "pcg/audio.hpp"
#include "pcg/rng.hpp"

#include <array>
#include <vector>

namespace pcg {

inline constexpr int kMelFrames = 96;
inline constexpr int kMelBins = 64;

struct MelSpectrogram {
    // row-major, time-major: grid[t * kMelBins + m]
    std::vector<double> grid = std::vector<double>(kMelFrames * kMelBins, 0.0);
    double rate_hz = 0.0;
    double norm_mean = 0.0, norm_std = 1.0;

    double& at(int t, int m) { return grid[t * kMelBins + m]; }
    double at(int t, int m) const { return grid[t * kMelBins + m]; }
};

struct MelConfig {
    double window_s = 0.064;
    double hop_s = 0.010;
    double fmin_hz = 20.0;
    // fmax = 0.45 * rate
    bool random_crop = false; // false = center crop
};

// STFT (Hann) -> 64 mel filters (fmin..0.45*rate) -> log power -> 96-frame
// crop -> per-instance standardization (std floor 1e-6). Short inputs are
// replication-padded first.
MelSpectrogram log_mel(const PcgRecording& rec, const MelConfig& config, Rng& rng);

// Mel-axis roll; vacated bins take the spectrogram minimum. |shift| <= max_shift.
MelSpectrogram pitch_shift(const MelSpectrogram& spec, int shift_bins, int max_shift = 8);

// Linear time interpolation to round(96/factor) frames, then center-crop or
// replicate-pad back to 96. factor in [0.6, 1.5].
MelSpectrogram time_stretch(const MelSpectrogram& spec, double factor);

struct AugmentRanges {
    int max_pitch_shift = 8;         // uniform in [-k, k]
    double stretch_lo = 0.6, stretch_hi = 1.5;
};

// Two independent (pitch_shift o time_stretch) draws, re-standardized.
std::pair<MelSpectrogram, MelSpectrogram> make_views(const MelSpectrogram& spec,
                                                     const AugmentRanges& ranges, Rng& rng);

MelSpectrogram standardize(const MelSpectrogram& spec);

// Raw export: 96*64 little-endian float32, row-major, time-major.
void write_mel_blob(const MelSpectrogram& spec, const std::string& path);
void write_mel_csv(const MelSpectrogram& spec, const std::string& path);

} // namespace pcg
