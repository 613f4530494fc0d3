#include "pcg/audio.hpp"
#include "pcg/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace pcg {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 2);
}

} // namespace

PcgRecording load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PcgError("FileNotFound", path);

    char tag[4];
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw PcgError("CorruptHeader", path + ": no RIFF");
    read_u32(in); // riff size
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw PcgError("CorruptHeader", path + ": no WAVE");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::vector<char> data;

    while (in.read(tag, 4)) {
        std::uint32_t size = read_u32(in);
        if (!in) throw PcgError("CorruptHeader", path + ": truncated chunk");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            format = read_u16(in);
            channels = read_u16(in);
            rate = read_u32(in);
            read_u32(in); // byte rate
            read_u16(in); // block align
            bits = read_u16(in);
            if (size > 16) in.seekg(size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data.resize(size);
            in.read(data.data(), size);
            if (static_cast<std::uint32_t>(in.gcount()) != size)
                throw PcgError("CorruptHeader", path + ": truncated data chunk");
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }

    if (!have_fmt) throw PcgError("CorruptHeader", path + ": missing fmt chunk");
    if (channels != 1) throw PcgError("UnsupportedFormat", path + ": expected mono, got " + std::to_string(channels) + " channels");
    bool pcm16 = (format == 1 && bits == 16);
    bool f32 = (format == 3 && bits == 32);
    if (!pcm16 && !f32) throw PcgError("UnsupportedFormat", path + ": only 16-bit PCM or 32-bit float supported");
    if (rate == 0) throw PcgError("CorruptHeader", path + ": zero sample rate");
    if (data.empty()) throw PcgError("EmptyAudio", path);

    PcgRecording rec;
    rec.sample_rate_hz = static_cast<int>(rate);
    rec.source_id = path;
    if (pcm16) {
        size_t n = data.size() / 2;
        rec.samples.resize(n);
        for (size_t i = 0; i < n; ++i) {
            std::int16_t s;
            std::memcpy(&s, data.data() + 2 * i, 2);
            rec.samples[i] = static_cast<double>(s) / 32768.0;
        }
    } else {
        size_t n = data.size() / 4;
        rec.samples.resize(n);
        for (size_t i = 0; i < n; ++i) {
            float s;
            std::memcpy(&s, data.data() + 4 * i, 4);
            rec.samples[i] = std::clamp(static_cast<double>(s), -1.0, 1.0);
        }
    }
    if (rec.samples.empty()) throw PcgError("EmptyAudio", path);
    for (double v : rec.samples)
        if (!std::isfinite(v)) throw PcgError("UnsupportedFormat", path + ": non-finite sample");
    return rec;
}

void write_wav(const PcgRecording& rec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    std::uint32_t n = static_cast<std::uint32_t>(rec.samples.size());
    std::uint32_t data_bytes = n * 2;

    out.write("RIFF", 4);
    write_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, 1); // PCM
    write_u16(out, 1); // mono
    write_u32(out, static_cast<std::uint32_t>(rec.sample_rate_hz));
    write_u32(out, static_cast<std::uint32_t>(rec.sample_rate_hz) * 2);
    write_u16(out, 2);
    write_u16(out, 16);
    out.write("data", 4);
    write_u32(out, data_bytes);
    for (std::uint32_t i = 0; i < n; ++i) {
        double v = std::clamp(rec.samples[i], -1.0, 1.0);
        long q = std::lround(v * 32768.0); // inverse of the load scaling
        std::int16_t s = static_cast<std::int16_t>(std::clamp(q, -32768l, 32767l));
        unsigned char b[2] = {static_cast<unsigned char>(s & 0xff),
                              static_cast<unsigned char>((s >> 8) & 0xff)};
        out.write(reinterpret_cast<char*>(b), 2);
    }
    if (!out) throw PcgError("IoError", "write failed: " + path);
}

PcgRecording resample(const PcgRecording& rec, int target_hz) {
    if (target_hz <= 0) throw PcgError("BadArgument", "target_hz must be positive");
    if (target_hz == rec.sample_rate_hz) return rec;

    const int src = rec.sample_rate_hz;
    const double ratio = static_cast<double>(target_hz) / src;
    // cutoff in cycles per source sample; 0.45*target for anti-aliasing,
    // capped at 0.45 of the source Nyquist band for upsampling
    const double fc = std::min(0.45 * target_hz / src, 0.45);
    // 64 taps per output-rate phase: widen support proportionally on decimation
    const int half = static_cast<int>(std::ceil(32.0 * std::max(1.0, 1.0 / ratio)));

    const size_t n_in = rec.samples.size();
    const size_t n_out = static_cast<size_t>(std::llround(static_cast<double>(n_in) * ratio));

    PcgRecording out;
    out.sample_rate_hz = target_hz;
    out.source_id = rec.source_id;
    out.subject_id = rec.subject_id;
    out.samples.assign(n_out, 0.0);

    for (size_t n = 0; n < n_out; ++n) {
        const double center = static_cast<double>(n) / ratio;
        const long k0 = static_cast<long>(std::floor(center)) - half + 1;
        const long k1 = static_cast<long>(std::floor(center)) + half;
        double acc = 0.0;
        for (long k = k0; k <= k1; ++k) {
            if (k < 0 || k >= static_cast<long>(n_in)) continue;
            const double t = static_cast<double>(k) - center;
            double sinc = (std::abs(t) < 1e-12) ? 2.0 * fc
                                                : std::sin(2.0 * kPi * fc * t) / (kPi * t);
            const double w = 0.5 * (1.0 + std::cos(kPi * t / half)); // Hann over the support
            acc += rec.samples[k] * sinc * w;
        }
        out.samples[n] = std::clamp(acc, -1.0, 1.0);
    }
    return out;
}

PcgRecording pad_by_replication(const PcgRecording& rec, double min_seconds) {
    if (rec.samples.empty()) throw PcgError("EmptyAudio", rec.source_id);
    if (rec.duration_s() >= min_seconds) return rec;
    PcgRecording out = rec;
    const size_t base = rec.samples.size();
    const size_t need = static_cast<size_t>(std::ceil(min_seconds * rec.sample_rate_hz));
    while (out.samples.size() < need)
        out.samples.insert(out.samples.end(), rec.samples.begin(), rec.samples.begin() + base);
    return out;
}

std::vector<PcgRecording> chunk(const PcgRecording& rec, double chunk_seconds) {
    if (chunk_seconds <= 0) throw PcgError("BadArgument", "chunk_seconds must be positive");
    const size_t step = static_cast<size_t>(std::llround(chunk_seconds * rec.sample_rate_hz));
    std::vector<PcgRecording> out;
    if (step == 0) return out;
    for (size_t start = 0; start + step <= rec.samples.size(); start += step) {
        PcgRecording c;
        c.sample_rate_hz = rec.sample_rate_hz;
        c.subject_id = rec.subject_id;
        c.source_id = rec.source_id + "#" + std::to_string(out.size());
        c.samples.assign(rec.samples.begin() + start, rec.samples.begin() + start + step);
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace pcg
