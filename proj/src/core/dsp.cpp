#include "core/dsp.hpp"

#include <algorithm>
#include <cmath>

namespace efn::dsp {

namespace {

using cplx = std::complex<double>;

struct Zpk {
    std::vector<cplx> z, p;
    double k = 1.0;
};

// analog Chebyshev type II low-pass prototype, stopband edge at 1 rad/s
Zpk cheb2ap(int n, double rs) {
    Zpk out;
    const double de = 1.0 / std::sqrt(std::pow(10.0, 0.1 * rs) - 1.0);
    const double mu = std::asinh(1.0 / de) / n;

    for (int m = -n + 1; m <= n - 1; m += 2) {
        if (m != 0) {
            const double s = std::sin(m * M_PI / (2.0 * n));
            out.z.emplace_back(0.0, 1.0 / s);
        }
        const cplx e = -std::exp(cplx(0.0, M_PI * m / (2.0 * n)));
        const cplx pl(std::sinh(mu) * e.real(), std::cosh(mu) * e.imag());
        out.p.push_back(1.0 / pl);
    }

    cplx num(1.0, 0.0), den(1.0, 0.0);
    for (const auto& p : out.p) num *= -p;
    for (const auto& z : out.z) den *= -z;
    out.k = (num / den).real();
    return out;
}

// low-pass prototype -> band-pass, center wo, width bw (rad/s)
Zpk lp2bp(const Zpk& in, double wo, double bw) {
    Zpk out;
    const int degree = static_cast<int>(in.p.size() - in.z.size());
    auto transform = [&](const std::vector<cplx>& roots, std::vector<cplx>& dst) {
        for (const auto& r : roots) {
            const cplx rl = r * (bw / 2.0);
            const cplx d = std::sqrt(rl * rl - wo * wo);
            dst.push_back(rl + d);
            dst.push_back(rl - d);
        }
    };
    transform(in.z, out.z);
    transform(in.p, out.p);
    for (int i = 0; i < degree; ++i) out.z.emplace_back(0.0, 0.0);
    out.k = in.k * std::pow(bw, degree);
    return out;
}

// analog -> digital via the bilinear transform
Zpk bilinear(const Zpk& in, double fs) {
    Zpk out;
    const double fs2 = 2.0 * fs;
    cplx num(1.0, 0.0), den(1.0, 0.0);
    for (const auto& z : in.z) {
        out.z.push_back((fs2 + z) / (fs2 - z));
        num *= fs2 - z;
    }
    for (const auto& p : in.p) {
        out.p.push_back((fs2 + p) / (fs2 - p));
        den *= fs2 - p;
    }
    const int degree = static_cast<int>(in.p.size() - in.z.size());
    for (int i = 0; i < degree; ++i) out.z.emplace_back(-1.0, 0.0);
    out.k = in.k * (num / den).real();
    return out;
}

constexpr double kConjTol = 1e-10;

// Collapse a conjugate-symmetric root set into quadratic factors
// z^2 + c1 z + c2, represented by (c1, c2) plus a representative root.
struct RootPair {
    double c1, c2;
    cplx rep;
};

std::vector<RootPair> pair_roots(std::vector<cplx> roots) {
    std::vector<RootPair> pairs;
    std::vector<cplx> reals;
    std::vector<cplx> upper;
    for (const auto& r : roots) {
        if (std::abs(r.imag()) < kConjTol)
            reals.push_back(r);
        else if (r.imag() > 0.0)
            upper.push_back(r);
    }
    for (const auto& r : upper)
        pairs.push_back({-2.0 * r.real(), std::norm(r), r});
    std::sort(reals.begin(), reals.end(),
              [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
    require(reals.size() % 2 == 0, "filter design: odd number of real roots");
    for (size_t i = 0; i + 1 < reals.size(); i += 2) {
        const double r1 = reals[i].real(), r2 = reals[i + 1].real();
        pairs.push_back({-(r1 + r2), r1 * r2, reals[i]});
    }
    return pairs;
}

Sos zpk_to_sos(const Zpk& zpk) {
    require(zpk.z.size() == zpk.p.size(), "filter design: zero/pole count mismatch");
    auto zp = pair_roots(zpk.z);
    auto pp = pair_roots(zpk.p);
    require(zp.size() == pp.size(), "filter design: section count mismatch");

    // poles closest to the unit circle first, matched with the nearest zeros
    std::sort(pp.begin(), pp.end(), [](const RootPair& a, const RootPair& b) {
        return std::abs(1.0 - std::abs(a.rep)) < std::abs(1.0 - std::abs(b.rep));
    });
    std::vector<bool> used(zp.size(), false);
    Sos sos;
    for (const auto& pole : pp) {
        size_t best = 0;
        double bestd = 1e300;
        for (size_t i = 0; i < zp.size(); ++i) {
            if (used[i]) continue;
            const double d = std::abs(zp[i].rep - pole.rep);
            if (d < bestd) { bestd = d; best = i; }
        }
        used[best] = true;
        sos.push_back({1.0, zp[best].c1, zp[best].c2, pole.c1, pole.c2});
    }
    // overall gain folded into the first section
    sos.front().b0 *= zpk.k;
    sos.front().b1 *= zpk.k;
    sos.front().b2 *= zpk.k;
    return sos;
}

void run_sos_forward(const Sos& sos, std::vector<double>& x) {
    for (const auto& s : sos) {
        double s1 = 0.0, s2 = 0.0;
        for (double& v : x) {
            const double y = s.b0 * v + s1;
            s1 = s.b1 * v - s.a1 * y + s2;
            s2 = s.b2 * v - s.a2 * y;
            v = y;
        }
    }
}

}  // namespace

const char* condition_name(Condition c) {
    switch (c) {
        case Condition::Clean: return "clean";
        case Condition::Noisy: return "noisy";
        case Condition::Mmse: return "mmse";
        case Condition::Transformer: return "transformer";
    }
    return "?";
}

void FilterSpec::validate(double fs) const {
    require(order >= 1, "filter spec: order must be >= 1");
    require(stop_lo_hz < pass_lo_hz && pass_lo_hz < pass_hi_hz && pass_hi_hz < stop_hi_hz,
            "filter spec: band edges out of order");
    require(stop_hi_hz < fs / 2.0, "filter spec: upper stop edge beyond Nyquist");
    require(stop_atten_db > 0.0, "filter spec: attenuation must be positive");
}

Sos design_cheby2_bandpass(const FilterSpec& spec, double fs) {
    spec.validate(fs);
    // Slight attenuation overshoot so the realized response meets the spec
    // strictly at the stop edges.
    const double rs = spec.stop_atten_db + 0.5;

    const double w1 = 2.0 * fs * std::tan(M_PI * spec.stop_lo_hz / fs);
    const double w2 = 2.0 * fs * std::tan(M_PI * spec.stop_hi_hz / fs);

    Zpk proto = cheb2ap(spec.order, rs);
    Zpk bp = lp2bp(proto, std::sqrt(w1 * w2), w2 - w1);
    Zpk dig = bilinear(bp, fs);

    for (const auto& p : dig.p)
        require(std::abs(p) < 1.0, "filter design: unstable pole");

    Sos sos = zpk_to_sos(dig);

    // feasibility check at the requested edges
    const double lo = sos_magnitude(sos, spec.stop_lo_hz, fs);
    const double hi = sos_magnitude(sos, spec.stop_hi_hz, fs);
    const double limit = std::pow(10.0, -spec.stop_atten_db / 20.0);
    require(lo <= limit && hi <= limit,
            "filter design: attenuation unreachable at the given edges/order");
    return sos;
}

double sos_magnitude(const Sos& sos, double freq_hz, double fs) {
    const double w = 2.0 * M_PI * freq_hz / fs;
    const cplx z1 = std::exp(cplx(0.0, -w));
    const cplx z2 = z1 * z1;
    cplx h(1.0, 0.0);
    for (const auto& s : sos)
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return std::abs(h);
}

std::vector<double> filtfilt(const Sos& sos, const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    const int pad = std::min(n - 1, 500);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    // odd reflection about the end points to suppress edge transients
    for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (int i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    run_sos_forward(sos, ext);
    std::reverse(ext.begin(), ext.end());
    run_sos_forward(sos, ext);
    std::reverse(ext.begin(), ext.end());

    return std::vector<double>(ext.begin() + pad, ext.begin() + pad + n);
}

RawEpoch filter_epoch(const Sos& sos, const RawEpoch& epoch) {
    RawEpoch out = epoch;
    std::vector<double> ch(epoch.n_samples);
    for (int c = 0; c < epoch.n_channels; ++c) {
        const float* src = epoch.channel(c);
        for (int i = 0; i < epoch.n_samples; ++i) ch[i] = src[i];
        const auto y = filtfilt(sos, ch);
        float* dst = out.channel(c);
        for (int i = 0; i < epoch.n_samples; ++i) dst[i] = static_cast<float>(y[i]);
    }
    return out;
}

RawEpoch downsample(const RawEpoch& epoch, int factor) {
    require(factor >= 1, "downsample: factor must be >= 1");
    require(std::fmod(epoch.fs, factor) == 0.0, "downsample: fs not divisible by factor");
    RawEpoch out;
    out.subject_id = epoch.subject_id;
    out.condition = epoch.condition;
    out.n_channels = epoch.n_channels;
    out.fs = epoch.fs / factor;
    out.n_samples = (epoch.n_samples + factor - 1) / factor;
    out.data.resize(static_cast<size_t>(out.n_channels) * out.n_samples);
    for (int c = 0; c < epoch.n_channels; ++c) {
        const float* src = epoch.channel(c);
        float* dst = out.channel(c);
        for (int i = 0; i < out.n_samples; ++i) dst[i] = src[static_cast<size_t>(i) * factor];
    }
    return out;
}

RawEpoch znormalize(const RawEpoch& epoch) {
    RawEpoch out = epoch;
    const int n = epoch.n_samples;
    for (int c = 0; c < epoch.n_channels; ++c) {
        const float* src = epoch.channel(c);
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += src[i];
        mean /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = src[i] - mean;
            var += d * d;
        }
        var /= n;  // population variance
        require(var > 1e-12, "znormalize: degenerate (near-constant) channel");
        const double inv = 1.0 / std::sqrt(var);
        float* dst = out.channel(c);
        for (int i = 0; i < n; ++i)
            dst[i] = static_cast<float>((src[i] - mean) * inv);
    }
    return out;
}

double alpha_power(const RawEpoch& epoch) {
    double acc = 0.0;
    for (int c = 0; c < epoch.n_channels; ++c) {
        const float* src = epoch.channel(c);
        double s = 0.0;
        for (int i = 0; i < epoch.n_samples; ++i)
            s += static_cast<double>(src[i]) * src[i];
        acc += s / epoch.n_samples;
    }
    return acc / epoch.n_channels;
}

int input_map_columns(int n_samples) {
    const auto lengths =
        pyramid_band_lengths(n_samples, db4_wavelet().length(), kDwtLevels);
    int total = 0;
    for (int l : lengths) total += l;
    return total;
}

InputMap build_input_map(const RawEpoch& epoch) {
    const WaveletFilters wav = db4_wavelet();
    InputMap map;
    map.subject_id = epoch.subject_id;
    map.condition = epoch.condition;
    map.n_channels = epoch.n_channels;
    map.subband_lengths = pyramid_band_lengths(epoch.n_samples, wav.length(), kDwtLevels);
    map.n_cols = 0;
    for (int l : map.subband_lengths) map.n_cols += l;
    map.data.resize(static_cast<size_t>(map.n_channels) * map.n_cols);

    std::vector<double> ch(epoch.n_samples);
    for (int c = 0; c < epoch.n_channels; ++c) {
        const float* src = epoch.channel(c);
        for (int i = 0; i < epoch.n_samples; ++i) ch[i] = src[i];
        const WaveletPyramid pyr = dwt_multilevel(ch, wav, kDwtLevels);
        float* dst = map.row(c);
        size_t off = 0;
        for (size_t b = 0; b < pyr.bands.size(); ++b) {
            require(static_cast<int>(pyr.bands[b].size()) == map.subband_lengths[b],
                    "input map: pyramid band length mismatch");
            for (double v : pyr.bands[b]) {
                require(std::isfinite(v), "input map: non-finite coefficient");
                dst[off++] = static_cast<float>(v);
            }
        }
    }
    return map;
}

}  // namespace efn::dsp
