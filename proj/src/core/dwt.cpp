#include "core/dwt.hpp"

#include <cmath>

namespace efn::dsp {

namespace {

WaveletFilters from_scaling(std::string name, std::vector<double> h) {
    WaveletFilters w;
    w.name = std::move(name);
    const int f = static_cast<int>(h.size());
    w.rec_lo = h;
    w.rec_hi.resize(f);
    for (int k = 0; k < f; ++k)
        w.rec_hi[k] = ((k & 1) ? -1.0 : 1.0) * h[f - 1 - k];
    w.dec_lo.assign(w.rec_lo.rbegin(), w.rec_lo.rend());
    w.dec_hi.assign(w.rec_hi.rbegin(), w.rec_hi.rend());
    return w;
}

void analysis_filter(const std::vector<double>& x, const std::vector<double>& g,
                     std::vector<double>& out) {
    const int n = static_cast<int>(x.size());
    const int f = static_cast<int>(g.size());
    const int len = (n + f - 1) / 2;
    out.assign(len, 0.0);
    for (int i = 0; i < len; ++i) {
        double s = 0.0;
        for (int j = 0; j < f; ++j) {
            const int k = 2 * i + 1 - j;
            if (k >= 0 && k < n) s += g[j] * x[k];
        }
        out[i] = s;
    }
}

}  // namespace

WaveletFilters haar_wavelet() {
    const double r = 1.0 / std::sqrt(2.0);
    return from_scaling("haar", {r, r});
}

WaveletFilters db4_wavelet() {
    return from_scaling("db4",
                        {0.23037781330885523, 0.7148465705525415, 0.6308807679295904,
                         -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
                         0.032883011666982945, -0.010597401784997278});
}

int dwt_output_length(int input_length, int filter_length) {
    return (input_length + filter_length - 1) / 2;
}

std::vector<int> pyramid_band_lengths(int n, int filter_length, int levels) {
    std::vector<int> detail_lengths;
    int cur = n;
    for (int l = 0; l < levels; ++l) {
        cur = dwt_output_length(cur, filter_length);
        detail_lengths.push_back(cur);
    }
    std::vector<int> out;
    out.push_back(detail_lengths.back());  // cA_L
    for (int l = levels - 1; l >= 0; --l) out.push_back(detail_lengths[l]);
    return out;
}

void dwt_step(const std::vector<double>& x, const WaveletFilters& w,
              std::vector<double>& approx, std::vector<double>& detail) {
    require(static_cast<int>(x.size()) >= w.length(),
            "dwt: signal shorter than wavelet filter");
    analysis_filter(x, w.dec_lo, approx);
    analysis_filter(x, w.dec_hi, detail);
}

std::vector<double> idwt_step(const std::vector<double>& approx,
                              const std::vector<double>& detail,
                              const WaveletFilters& w, int out_len) {
    require(approx.size() == detail.size(), "idwt: band length mismatch");
    const int f = w.length();
    const int l = static_cast<int>(approx.size());
    const int ulen = 2 * l - 1;
    const int full_len = ulen + f - 1;
    std::vector<double> full(full_len, 0.0);
    for (int i = 0; i < l; ++i) {
        const double a = approx[i], d = detail[i];
        const int base = 2 * i;
        for (int j = 0; j < f; ++j)
            full[base + j] += a * w.rec_lo[j] + d * w.rec_hi[j];
    }
    const int trim = f - 2;
    std::vector<double> rec(full.begin() + trim, full.end() - trim);
    require(static_cast<int>(rec.size()) >= out_len, "idwt: inconsistent output length");
    rec.resize(out_len);
    return rec;
}

WaveletPyramid dwt_multilevel(const std::vector<double>& x, const WaveletFilters& w,
                              int levels) {
    require(levels >= 1, "dwt: levels must be >= 1");
    WaveletPyramid p;
    p.levels = levels;
    std::vector<std::vector<double>> details;
    std::vector<double> cur = x;
    for (int l = 0; l < levels; ++l) {
        p.input_lengths.push_back(static_cast<int>(cur.size()));
        std::vector<double> a, d;
        dwt_step(cur, w, a, d);
        details.push_back(std::move(d));
        cur = std::move(a);
    }
    p.bands.push_back(std::move(cur));  // cA_L
    for (int l = levels - 1; l >= 0; --l) p.bands.push_back(std::move(details[l]));
    return p;
}

std::vector<double> idwt_multilevel(const WaveletPyramid& p, const WaveletFilters& w) {
    require(p.bands.size() == static_cast<size_t>(p.levels) + 1, "idwt: malformed pyramid");
    std::vector<double> cur = p.bands[0];
    for (int l = 0; l < p.levels; ++l) {
        const auto& detail = p.bands[1 + l];
        const int out_len = p.input_lengths[p.levels - 1 - l];
        cur = idwt_step(cur, detail, w, out_len);
    }
    return cur;
}

}  // namespace efn::dsp
