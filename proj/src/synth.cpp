#include "pcg/synth.hpp"
#include "pcg/dsp.hpp"
#include "pcg/error.hpp"
#include "pcg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace pcg {

namespace {

constexpr double kPi = 3.14159265358979323846;

void add_tone_burst(std::vector<double>& x, double rate, double center_s, double freq_hz,
                    double amp, double sigma_s) {
    const long n = static_cast<long>(x.size());
    const long lo = std::max(0l, static_cast<long>((center_s - 4 * sigma_s) * rate));
    const long hi = std::min(n, static_cast<long>((center_s + 4 * sigma_s) * rate) + 1);
    for (long i = lo; i < hi; ++i) {
        const double t = i / rate - center_s;
        x[i] += amp * std::exp(-0.5 * t * t / (sigma_s * sigma_s)) *
                std::sin(2.0 * kPi * freq_hz * t);
    }
}

double power(const std::vector<double>& x) {
    double p = 0.0;
    for (double v : x) p += v * v;
    return x.empty() ? 0.0 : p / static_cast<double>(x.size());
}

} // namespace

PcgRecording synthesize(const SynthSpec& spec) {
    if (spec.heart_rate_bpm < 40.0 || spec.heart_rate_bpm > 200.0)
        throw PcgError("BadArgument", "heart_rate_bpm out of [40, 200]");
    if (spec.systole_fraction <= 0.0 || spec.systole_fraction >= 0.5)
        throw PcgError("BadArgument", "systole_fraction out of (0, 0.5)");
    if (spec.murmur && spec.murmur_band_hz.second >= spec.sample_rate_hz / 2.0)
        throw PcgError("BadArgument", "murmur band above Nyquist");
    if (spec.duration_s <= 0.0 || spec.sample_rate_hz <= 0)
        throw PcgError("BadArgument", "duration and sample rate must be positive");

    const double rate = spec.sample_rate_hz;
    const std::size_t n = static_cast<std::size_t>(std::llround(spec.duration_s * rate));
    const double cycle_s = 60.0 / spec.heart_rate_bpm;
    const double sigma_s = 0.025;

    std::vector<double> clean(n, 0.0);
    for (double t0 = 0.0; t0 < spec.duration_s; t0 += cycle_s) {
        add_tone_burst(clean, rate, t0, spec.s1_freq_hz, 1.0, sigma_s);
        if (spec.s2_amp_ratio != 0.0)
            add_tone_burst(clean, rate, t0 + spec.systole_fraction * cycle_s, spec.s2_freq_hz,
                           spec.s2_amp_ratio, sigma_s);
    }

    Rng rng(spec.seed ^ 0x5ca1ab1eull);

    if (spec.murmur && spec.murmur_amp > 0.0) {
        // band-limited noise, masked onto the systolic interval of each cycle
        const std::size_t m = next_pow2(n);
        std::vector<std::complex<double>> buf(m);
        for (std::size_t i = 0; i < m; ++i) buf[i] = {rng.gaussian(), 0.0};
        fft(buf, false);
        for (std::size_t k = 0; k <= m / 2; ++k) {
            const double f = k * rate / static_cast<double>(m);
            if (f < spec.murmur_band_hz.first || f > spec.murmur_band_hz.second) {
                buf[k] = {0.0, 0.0};
                if (k > 0 && k < m / 2) buf[m - k] = {0.0, 0.0};
            } else if (k > 0 && k < m / 2) {
                buf[m - k] = std::conj(buf[k]);
            }
        }
        fft(buf, true);
        std::vector<double> noise(n);
        for (std::size_t i = 0; i < n; ++i) noise[i] = buf[i].real();
        const double np = power(noise);
        const double scale = np > 0.0 ? spec.murmur_amp / std::sqrt(np) : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = i / rate;
            const double phase = std::fmod(t, cycle_s) / cycle_s;
            // systole minus the S1/S2 burst widths
            const double lo = 2.0 * sigma_s / cycle_s;
            const double hi = spec.systole_fraction - 2.0 * sigma_s / cycle_s;
            if (phase > lo && phase < hi) clean[i] += noise[i] * scale;
        }
    }

    std::vector<double> out = clean;
    if (std::isfinite(spec.snr_db)) {
        std::vector<double> noise(n);
        for (std::size_t i = 0; i < n; ++i) noise[i] = rng.gaussian();
        const double target_np = power(clean) / std::pow(10.0, spec.snr_db / 10.0);
        const double np = power(noise);
        const double scale = np > 0.0 ? std::sqrt(target_np / np) : 0.0;
        for (std::size_t i = 0; i < n; ++i) out[i] += noise[i] * scale;
    }

    // normalize into [-1, 1] leaving a little headroom
    double peak = 0.0;
    for (double v : out) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (auto& v : out) v *= 0.95 / peak;

    PcgRecording rec;
    rec.samples = std::move(out);
    rec.sample_rate_hz = spec.sample_rate_hz;
    rec.source_id = "synth";
    return rec;
}

Manifest make_corpus(const CorpusOptions& opt) {
    if (opt.n <= 0) throw PcgError("BadArgument", "corpus size must be positive");
    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);

    Rng rng(opt.seed);
    Manifest manifest;
    for (int i = 0; i < opt.n; ++i) {
        Rng item = rng.fork(static_cast<std::uint64_t>(i) + 1);
        SynthSpec spec;
        spec.heart_rate_bpm = item.uniform(50.0, 150.0);
        spec.duration_s = opt.duration_s;
        spec.sample_rate_hz = opt.sample_rate_hz;
        spec.s1_freq_hz = item.uniform(40.0, 80.0);
        spec.s2_freq_hz = item.uniform(70.0, 110.0);
        spec.s2_amp_ratio = item.uniform(0.5, 1.0);
        spec.systole_fraction = item.uniform(0.25, 0.45);
        spec.murmur = (i % 2) == 1;
        spec.murmur_amp = spec.murmur ? item.uniform(0.1, 0.3) : 0.0;
        spec.snr_db = item.uniform(opt.snr_lo_db, opt.snr_hi_db);
        spec.seed = item.next_u64();

        PcgRecording rec = synthesize(spec);
        char name[32];
        std::snprintf(name, sizeof(name), "rec_%05d.wav", i);
        const std::string path = (fs::path(opt.out_dir) / name).string();
        write_wav(rec, path);

        ManifestRow row;
        row.path = path;
        row.quality_score = opt.quality_rule.score(spec.snr_db);
        row.outcome_label = spec.murmur ? Outcome::abnormal : Outcome::normal;
        manifest.rows.push_back(std::move(row));
    }
    const std::string mpath = (fs::path(opt.out_dir) / "manifest.csv").string();
    write_manifest(manifest, mpath);
    return manifest;
}

} // namespace pcg
