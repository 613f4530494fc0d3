#include "pcg/features.hpp"
#include "pcg/dsp.hpp"
#include "pcg/error.hpp"
#include "pcg/threading.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEps = 1e-10;
constexpr int kOperatingRate = 1000;

struct Moments {
    double mean = 0.0, std = 0.0, skew = 0.0, kurt = 0.0;
};

Moments moments(const std::vector<double>& x) {
    Moments m;
    if (x.empty()) return m;
    const double n = static_cast<double>(x.size());
    for (double v : x) m.mean += v;
    m.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - m.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.std = std::sqrt(m2);
    if (m2 > 1e-24) {
        m.skew = m3 / std::pow(m2, 1.5);
        m.kurt = m4 / (m2 * m2);
    }
    return m;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& env) {
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < env.size(); ++i)
        if (env[i] > env[i - 1] && env[i] >= env[i + 1]) peaks.push_back(i);
    return peaks;
}

double prominence(const std::vector<double>& env, std::size_t peak) {
    const double h = env[peak];
    double left_min = h, right_min = h;
    for (std::size_t i = peak; i-- > 0;) {
        if (env[i] > h) break;
        left_min = std::min(left_min, env[i]);
    }
    for (std::size_t i = peak + 1; i < env.size(); ++i) {
        if (env[i] > h) break;
        right_min = std::min(right_min, env[i]);
    }
    return h - std::max(left_min, right_min);
}

double interval_mean(const std::vector<double>& env, double rate,
                     const std::vector<Interval>& intervals) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& [a, b] : intervals) {
        const std::size_t i0 = static_cast<std::size_t>(std::max(0.0, a * rate));
        const std::size_t i1 =
            std::min(env.size(), static_cast<std::size_t>(std::max(0.0, b * rate)) + 1);
        for (std::size_t i = i0; i < i1; ++i) {
            sum += env[i];
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

double quality_factor(const std::vector<double>& env, const Segmentation& seg,
                      const std::vector<Interval>& event_intervals) {
    const double rate = kOperatingRate;
    const double ev = interval_mean(env, rate, event_intervals);
    const double sys = interval_mean(env, rate, seg.systole_intervals);
    const double dia = interval_mean(env, rate, seg.diastole_intervals);
    const double denom = 0.5 * (sys + dia);
    if (denom < 1e-12) return 0.0;
    return ev / denom;
}

// 26-filter triangular mel bank over [0, fmax]; returns filter weights per
// FFT bin for a one-sided spectrum of nfft/2+1 bins.
std::vector<std::vector<double>> mel_bank(int n_filters, std::size_t nfft, double rate,
                                          double fmax) {
    auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
    auto mel_to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const double mel_max = hz_to_mel(fmax);
    std::vector<double> edges(n_filters + 2);
    for (int i = 0; i < n_filters + 2; ++i)
        edges[i] = mel_to_hz(mel_max * i / (n_filters + 1));

    std::vector<std::vector<double>> bank(n_filters, std::vector<double>(nfft / 2 + 1, 0.0));
    for (int f = 0; f < n_filters; ++f) {
        const double lo = edges[f], mid = edges[f + 1], hi = edges[f + 2];
        for (std::size_t k = 0; k <= nfft / 2; ++k) {
            const double freq = k * rate / static_cast<double>(nfft);
            if (freq > lo && freq < mid) bank[f][k] = (freq - lo) / std::max(mid - lo, 1e-12);
            else if (freq >= mid && freq < hi) bank[f][k] = (hi - freq) / std::max(hi - mid, 1e-12);
        }
    }
    return bank;
}

double sanitize(double v, bool& flagged) {
    if (std::isfinite(v)) return v;
    flagged = true;
    return 0.0;
}

} // namespace

std::vector<double> homomorphic_envelope(const PcgRecording& rec) {
    if (rec.sample_rate_hz != kOperatingRate)
        throw PcgError("WrongSampleRate", "expected 1 kHz, got " +
                                              std::to_string(rec.sample_rate_hz) + " Hz");
    std::vector<double> mag = analytic_magnitude(rec.samples);
    for (auto& v : mag) v = std::log(v + kEps);
    std::vector<double> smooth = one_pole_lowpass(mag, 8.0, kOperatingRate);
    for (auto& v : smooth) v = std::exp(v);
    return smooth;
}

Segmentation segment_envelope(const std::vector<double>& env, double rate_hz) {
    auto candidates = local_maxima(env);
    if (candidates.size() >= 2) {
        std::vector<double> heights;
        for (auto p : candidates) heights.push_back(env[p]);
        std::nth_element(heights.begin(), heights.begin() + heights.size() / 2, heights.end());
        const double median_h = heights[heights.size() / 2];
        const double min_prom = 0.25 * median_h;

        std::vector<std::size_t> strong;
        for (auto p : candidates)
            if (prominence(env, p) >= min_prom) strong.push_back(p);

        // enforce min peak distance 200 ms, keeping taller peaks
        std::sort(strong.begin(), strong.end(),
                  [&](std::size_t a, std::size_t b) { return env[a] > env[b]; });
        const double min_dist = 0.2 * rate_hz;
        std::vector<std::size_t> accepted;
        for (auto p : strong) {
            bool ok = true;
            for (auto q : accepted)
                if (std::abs(static_cast<double>(p) - static_cast<double>(q)) < min_dist) {
                    ok = false;
                    break;
                }
            if (ok) accepted.push_back(p);
        }
        std::sort(accepted.begin(), accepted.end());
        candidates = std::move(accepted);
    }

    if (candidates.size() < 4)
        throw PcgError("TooFewPeaks", "need at least 4 envelope peaks, found " +
                                          std::to_string(candidates.size()));

    Segmentation seg;
    for (auto p : candidates) seg.peak_times_s.push_back(p / rate_hz);

    // alternating assignment: pick the phase whose even-index gaps are shorter
    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < seg.peak_times_s.size(); ++i)
        gaps.push_back(seg.peak_times_s[i + 1] - seg.peak_times_s[i]);
    double even_sum = 0.0, odd_sum = 0.0;
    std::size_t even_n = 0, odd_n = 0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (i % 2 == 0) { even_sum += gaps[i]; ++even_n; }
        else { odd_sum += gaps[i]; ++odd_n; }
    }
    const double even_mean = even_n ? even_sum / even_n : 0.0;
    const double odd_mean = odd_n ? odd_sum / odd_n : 0.0;
    const bool first_is_s1 = (odd_n == 0) || even_mean <= odd_mean;
    const std::size_t s1_phase = first_is_s1 ? 0 : 1;

    const double half_event = 0.05;
    const double dur = env.size() / rate_hz;
    for (std::size_t i = 0; i < seg.peak_times_s.size(); ++i) {
        const double t = seg.peak_times_s[i];
        const Interval ev{std::max(0.0, t - half_event), std::min(dur, t + half_event)};
        if (i % 2 == s1_phase) seg.s1_intervals.push_back(ev);
        else seg.s2_intervals.push_back(ev);
    }
    for (std::size_t i = 0; i + 1 < seg.peak_times_s.size(); ++i) {
        const Interval gap{seg.peak_times_s[i], seg.peak_times_s[i + 1]};
        if (i % 2 == s1_phase) seg.systole_intervals.push_back(gap);
        else seg.diastole_intervals.push_back(gap);
    }

    const double short_mean = first_is_s1 ? even_mean : odd_mean;
    const double long_mean = first_is_s1 ? odd_mean : even_mean;
    if (long_mean <= 0.0 || short_mean / long_mean > 0.85 || seg.systole_intervals.empty() ||
        seg.diastole_intervals.empty())
        seg.degenerate = true;
    return seg;
}

double s2_quality_factor(const std::vector<double>& env, const Segmentation& seg) {
    return quality_factor(env, seg, seg.s2_intervals);
}

double s1_quality_factor(const std::vector<double>& env, const Segmentation& seg) {
    return quality_factor(env, seg, seg.s1_intervals);
}

const std::vector<std::string>& feature_schema() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        n.push_back("s1_quality_factor");
        n.push_back("s2_quality_factor");
        const int edges[9] = {0, 25, 50, 100, 150, 200, 300, 400, 500};
        for (int b = 0; b < 8; ++b)
            n.push_back("band_power_rel_" + std::to_string(edges[b]) + "_" +
                        std::to_string(edges[b + 1]));
        n.push_back("spectral_centroid");
        n.push_back("spectral_bandwidth");
        n.push_back("spectral_rolloff_085");
        n.push_back("spectral_flatness");
        n.push_back("spectral_crest");
        for (int c = 0; c < 13; ++c) n.push_back("mfcc_mean_" + std::to_string(c));
        for (int c = 0; c < 13; ++c) n.push_back("mfcc_std_" + std::to_string(c));
        n.push_back("zcr_mean");
        n.push_back("zcr_std");
        n.push_back("env_mean");
        n.push_back("env_std");
        n.push_back("env_skewness");
        n.push_back("env_kurtosis");
        n.push_back("env_peak_rate");
        n.push_back("env_autocorr_max");
        n.push_back("env_autocorr_lag_s");
        n.push_back("sig_rms");
        n.push_back("sig_skewness");
        n.push_back("sig_kurtosis");
        n.push_back("hjorth_mobility");
        n.push_back("hjorth_complexity");
        n.push_back("sample_entropy");
        n.push_back("degenerate_flag");
        for (int b = 0; b < 8; ++b)
            n.push_back("band_entropy_" + std::to_string(edges[b]) + "_" +
                        std::to_string(edges[b + 1]));
        for (int b = 0; b < 7; ++b)
            n.push_back("band_ratio_" + std::to_string(b + 1) + "_" + std::to_string(b));
        return n;
    }();
    return names;
}

FeatureVector extract_features(const PcgRecording& rec) {
    if (rec.sample_rate_hz != kOperatingRate)
        throw PcgError("WrongSampleRate", "expected 1 kHz input");
    if (rec.duration_s() < 6.0 - 1e-9)
        throw PcgError("TooShort", "need >= 6 s, got " + std::to_string(rec.duration_s()) + " s");

    const double rate = kOperatingRate;
    const auto& x = rec.samples;
    bool flagged = false;

    // --- envelope + segmentation ------------------------------------------
    std::vector<double> env = homomorphic_envelope(rec);
    double q1 = 0.0, q2 = 0.0, peak_rate = 0.0;
    bool seg_ok = false;
    Segmentation seg;
    try {
        seg = segment_envelope(env, rate);
        seg_ok = true;
        q1 = s1_quality_factor(env, seg);
        q2 = s2_quality_factor(env, seg);
        peak_rate = static_cast<double>(seg.peak_times_s.size()) / rec.duration_s();
        if (seg.degenerate) flagged = true;
    } catch (const PcgError&) {
        flagged = true;
    }
    (void)seg_ok;

    // --- Welch power spectrum ---------------------------------------------
    const std::size_t nfft = 1024;
    std::vector<double> psd = welch_psd(x, nfft, rate);
    const double total_power = std::accumulate(psd.begin(), psd.end(), 0.0);
    const double bin_hz = rate / static_cast<double>(nfft);

    const double band_edges[9] = {0, 25, 50, 100, 150, 200, 300, 400, 500};
    std::vector<double> band_power(8, 0.0);
    std::vector<std::vector<double>> band_bins(8);
    for (std::size_t k = 0; k < psd.size(); ++k) {
        const double f = k * bin_hz;
        int b = 7;
        for (int i = 0; i < 8; ++i)
            if (f >= band_edges[i] && f < band_edges[i + 1]) { b = i; break; }
        band_power[b] += psd[k];
        band_bins[b].push_back(psd[k]);
    }
    std::vector<double> band_rel(8, 0.0);
    if (total_power > 0.0)
        for (int b = 0; b < 8; ++b) band_rel[b] = band_power[b] / total_power;
    else
        flagged = true;

    double centroid = 0.0, bandwidth = 0.0, rolloff = 0.0, flatness = 0.0, crest = 0.0;
    if (total_power > 0.0) {
        for (std::size_t k = 0; k < psd.size(); ++k) centroid += k * bin_hz * psd[k];
        centroid /= total_power;
        for (std::size_t k = 0; k < psd.size(); ++k) {
            const double d = k * bin_hz - centroid;
            bandwidth += d * d * psd[k];
        }
        bandwidth = std::sqrt(bandwidth / total_power);
        double acc = 0.0;
        for (std::size_t k = 0; k < psd.size(); ++k) {
            acc += psd[k];
            if (acc >= 0.85 * total_power) { rolloff = k * bin_hz; break; }
        }
        double log_sum = 0.0, max_psd = 0.0;
        for (double v : psd) {
            log_sum += std::log(v + 1e-20);
            max_psd = std::max(max_psd, v);
        }
        const double mean_psd = total_power / static_cast<double>(psd.size());
        flatness = std::exp(log_sum / static_cast<double>(psd.size())) / mean_psd;
        crest = max_psd / mean_psd;
    }

    std::vector<double> band_entropy(8, 0.0);
    for (int b = 0; b < 8; ++b) {
        if (band_power[b] <= 0.0 || band_bins[b].size() < 2) continue;
        double h = 0.0;
        for (double v : band_bins[b]) {
            const double p = v / band_power[b];
            if (p > 0.0) h -= p * std::log(p);
        }
        band_entropy[b] = h / std::log(static_cast<double>(band_bins[b].size()));
    }

    std::vector<double> band_ratio(7, 0.0);
    for (int b = 0; b < 7; ++b) band_ratio[b] = band_rel[b + 1] / (band_rel[b] + 1e-12);

    // --- MFCC + ZCR over 25 ms / 10 ms frames ------------------------------
    const std::size_t frame = 25, hop = 10, mfcc_nfft = 64;
    static const auto bank = mel_bank(26, mfcc_nfft, rate, 500.0);
    std::vector<std::vector<double>> mfccs;
    std::vector<double> zcrs;
    std::vector<std::complex<double>> fbuf(mfcc_nfft);
    for (std::size_t start = 0; start + frame <= x.size(); start += hop) {
        std::size_t crossings = 0;
        for (std::size_t i = 1; i < frame; ++i)
            if ((x[start + i] >= 0.0) != (x[start + i - 1] >= 0.0)) ++crossings;
        zcrs.push_back(static_cast<double>(crossings) / static_cast<double>(frame - 1));

        for (std::size_t i = 0; i < mfcc_nfft; ++i) {
            double v = i < frame ? x[start + i] : 0.0;
            const double w =
                i < frame ? 0.5 * (1.0 - std::cos(2.0 * kPi * i / (frame - 1))) : 0.0;
            fbuf[i] = {v * w, 0.0};
        }
        fft(fbuf, false);
        std::vector<double> spec(mfcc_nfft / 2 + 1);
        for (std::size_t k = 0; k <= mfcc_nfft / 2; ++k) spec[k] = std::norm(fbuf[k]);
        std::vector<double> log_mel(26);
        for (int f = 0; f < 26; ++f) {
            double e = 0.0;
            for (std::size_t k = 0; k <= mfcc_nfft / 2; ++k) e += bank[f][k] * spec[k];
            log_mel[f] = std::log(e + kEps);
        }
        std::vector<double> cep(13, 0.0);
        for (int c = 0; c < 13; ++c) {
            for (int f = 0; f < 26; ++f)
                cep[c] += log_mel[f] * std::cos(kPi * c * (f + 0.5) / 26.0);
            cep[c] *= std::sqrt(2.0 / 26.0);
        }
        mfccs.push_back(std::move(cep));
    }
    std::vector<double> mfcc_mean(13, 0.0), mfcc_std(13, 0.0);
    if (!mfccs.empty()) {
        for (int c = 0; c < 13; ++c) {
            std::vector<double> col;
            col.reserve(mfccs.size());
            for (const auto& row : mfccs) col.push_back(row[c]);
            const Moments m = moments(col);
            mfcc_mean[c] = m.mean;
            mfcc_std[c] = m.std;
        }
    }
    const Moments zcr_m = moments(zcrs);

    // --- envelope + signal statistics --------------------------------------
    const Moments env_m = moments(env);
    double ac_max = 0.0, ac_lag = 0.0;
    {
        std::vector<double> e0(env);
        for (auto& v : e0) v -= env_m.mean;
        double denom = 0.0;
        for (double v : e0) denom += v * v;
        const std::size_t lag_lo = static_cast<std::size_t>(0.3 * rate);
        const std::size_t lag_hi =
            std::min(e0.size() - 1, static_cast<std::size_t>(2.0 * rate));
        if (denom > 1e-24) {
            for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
                double num = 0.0;
                for (std::size_t i = 0; i + lag < e0.size(); ++i) num += e0[i] * e0[i + lag];
                const double r = num / denom;
                if (r > ac_max) {
                    ac_max = r;
                    ac_lag = lag / rate;
                }
            }
        }
    }

    const Moments sig_m = moments(x);
    double rms = 0.0;
    for (double v : x) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(x.size()));

    auto variance = [](const std::vector<double>& v) {
        const Moments m = moments(v);
        return m.std * m.std;
    };
    std::vector<double> d1(x.size() > 1 ? x.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) d1[i] = x[i + 1] - x[i];
    std::vector<double> d2(d1.size() > 1 ? d1.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < d1.size(); ++i) d2[i] = d1[i + 1] - d1[i];
    const double var_x = variance(x), var_d1 = variance(d1), var_d2 = variance(d2);
    double mobility = 0.0, complexity = 0.0;
    if (var_x > 1e-24) mobility = std::sqrt(var_d1 / var_x);
    if (var_d1 > 1e-24 && mobility > 1e-12)
        complexity = std::sqrt(var_d2 / var_d1) / mobility;

    // --- sample entropy on the 4x decimated signal -------------------------
    double samp_en = 0.0;
    {
        std::vector<double> lp = one_pole_lowpass(x, 100.0, rate);
        std::vector<double> dec;
        for (std::size_t i = 0; i < lp.size(); i += 4) dec.push_back(lp[i]);
        const Moments dm = moments(dec);
        const double r = 0.2 * dm.std;
        if (r > 1e-12 && dec.size() > 10) {
            const std::size_t nd = dec.size();
            long long b_count = 0, a_count = 0;
            for (std::size_t i = 0; i + 2 < nd; ++i) {
                for (std::size_t j = i + 1; j + 2 < nd; ++j) {
                    if (std::abs(dec[i] - dec[j]) < r && std::abs(dec[i + 1] - dec[j + 1]) < r) {
                        ++b_count;
                        if (std::abs(dec[i + 2] - dec[j + 2]) < r) ++a_count;
                    }
                }
            }
            if (a_count > 0 && b_count > 0)
                samp_en = -std::log(static_cast<double>(a_count) / static_cast<double>(b_count));
            else
                flagged = true;
        } else {
            flagged = true;
        }
    }

    // --- assemble ----------------------------------------------------------
    std::vector<double> v;
    v.reserve(72);
    v.push_back(q1);
    v.push_back(q2);
    for (int b = 0; b < 8; ++b) v.push_back(band_rel[b]);
    v.push_back(centroid);
    v.push_back(bandwidth);
    v.push_back(rolloff);
    v.push_back(flatness);
    v.push_back(crest);
    for (int c = 0; c < 13; ++c) v.push_back(mfcc_mean[c]);
    for (int c = 0; c < 13; ++c) v.push_back(mfcc_std[c]);
    v.push_back(zcr_m.mean);
    v.push_back(zcr_m.std);
    v.push_back(env_m.mean);
    v.push_back(env_m.std);
    v.push_back(env_m.skew);
    v.push_back(env_m.kurt);
    v.push_back(peak_rate);
    v.push_back(ac_max);
    v.push_back(ac_lag);
    v.push_back(rms);
    v.push_back(sig_m.skew);
    v.push_back(sig_m.kurt);
    v.push_back(mobility);
    v.push_back(complexity);
    v.push_back(samp_en);
    const std::size_t flag_slot = v.size();
    v.push_back(0.0); // degenerate flag, patched below
    for (int b = 0; b < 8; ++b) v.push_back(band_entropy[b]);
    for (int b = 0; b < 7; ++b) v.push_back(band_ratio[b]);

    for (std::size_t i = 0; i < v.size(); ++i) v[i] = sanitize(v[i], flagged);
    v[flag_slot] = flagged ? 1.0 : 0.0;

    FeatureVector out;
    out.names = feature_schema();
    out.values = std::move(v);
    return out;
}

FeatureMatrix extract_feature_matrix(const std::vector<PcgRecording>& recs) {
    FeatureMatrix m;
    m.names = feature_schema();
    m.rows.resize(recs.size());
    const int nt = num_threads();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
    for (long i = 0; i < static_cast<long>(recs.size()); ++i)
        m.rows[i] = extract_features(recs[i]).values;
    (void)nt;
    return m;
}

void write_feature_matrix(const FeatureMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    for (std::size_t i = 0; i < m.names.size(); ++i)
        out << (i ? "," : "") << m.names[i];
    out << "\n";
    out.precision(17);
    for (const auto& row : m.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

FeatureMatrix read_feature_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PcgError("FileNotFound", path);
    FeatureMatrix m;
    std::string line;
    if (!std::getline(in, line)) throw PcgError("IoError", path + ": empty");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) m.names.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream rs(line);
        while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != m.names.size())
            throw PcgError("SchemaMismatch", path + ": row width mismatch");
        m.rows.push_back(std::move(row));
    }
    return m;
}

} // namespace pcg
