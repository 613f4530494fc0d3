#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pcg {

struct PcgRecording {
    std::vector<double> samples;  // amplitudes in [-1, 1]
    int sample_rate_hz = 0;
    std::string source_id;
    std::optional<std::string> subject_id;

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate_hz;
    }
};

// PCM WAV, mono, 16-bit int or 32-bit float. Integer samples are scaled by
// 1/32768. Throws UnsupportedFormat / CorruptHeader / EmptyAudio.
PcgRecording load_wav(const std::string& path);

// Writes 16-bit PCM; values clamped to [-1, 1] and scaled by 32768.
void write_wav(const PcgRecording& rec, const std::string& path);

// Windowed-sinc resampler, Hann window, 64 taps per output phase,
// cutoff 0.45 * target_hz. target == source returns the input unchanged.
PcgRecording resample(const PcgRecording& rec, int target_hz);

// Appends whole-signal copies until duration >= min_seconds.
PcgRecording pad_by_replication(const PcgRecording& rec, double min_seconds);

// Non-overlapping chunks of chunk_seconds; trailing partial chunk dropped.
// Chunk source_id = "<parent>#<index>".
std::vector<PcgRecording> chunk(const PcgRecording& rec, double chunk_seconds);

} // namespace pcg
