#include "core/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace efn::stats {

namespace {

// continued fraction for the incomplete beta (modified Lentz)
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    fail("ibeta: continued fraction failed to converge");
}

}  // namespace

double ibeta(double a, double b, double x) {
    require(a > 0.0 && b > 0.0, "ibeta: a, b must be positive");
    require(x >= 0.0 && x <= 1.0, "ibeta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double t_sf_two_sided(double t, double df) {
    return ibeta(df / 2.0, 0.5, df / (df + t * t));
}

double f_sf(double f, double df1, double df2) {
    if (f <= 0.0) return 1.0;
    return ibeta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

TTestResult paired_t(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "paired_t: unequal lengths");
    const int n = static_cast<int>(x.size());
    require(n >= 2, "paired_t: need at least two pairs");
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) d[i] = x[i] - y[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double var = ss / (n - 1);
    require(var > 0.0, "paired_t: zero variance of differences");

    TTestResult r;
    r.df = n - 1;
    r.t = mean / std::sqrt(var / n);
    r.p = t_sf_two_sided(r.t, r.df);
    return r;
}

FdrResult bh_fdr(const std::vector<double>& pvalues, double q) {
    const int m = static_cast<int>(pvalues.size());
    require(m > 0, "bh_fdr: empty p-value list");
    for (double p : pvalues)
        require(p >= 0.0 && p <= 1.0, "bh_fdr: p-value outside [0,1]");

    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return pvalues[a] < pvalues[b]; });

    // step-up rejection threshold
    int max_i = 0;  // 1-based rank of the largest rejected p
    for (int i = 1; i <= m; ++i)
        if (pvalues[order[i - 1]] <= static_cast<double>(i) * q / m) max_i = i;

    FdrResult out;
    out.reject.assign(m, false);
    out.p_adjusted.assign(m, 1.0);
    for (int i = 1; i <= max_i; ++i) out.reject[order[i - 1]] = true;

    // adjusted p: running minimum of m*p/rank from the largest rank down
    double running = 1.0;
    for (int i = m; i >= 1; --i) {
        const double adj = std::min(1.0, pvalues[order[i - 1]] * m / i);
        running = std::min(running, adj);
        out.p_adjusted[order[i - 1]] = running;
    }
    return out;
}

RmAnovaTable rm_anova_gg(const std::vector<std::vector<double>>& matrix) {
    const int n = static_cast<int>(matrix.size());
    require(n >= 2, "rm_anova: need at least two subjects");
    const int k = static_cast<int>(matrix.front().size());
    require(k >= 2, "rm_anova: need at least two conditions");
    for (const auto& row : matrix)
        require(static_cast<int>(row.size()) == k, "rm_anova: ragged matrix");

    double grand = 0.0;
    std::vector<double> subj_mean(n, 0.0), cond_mean(k, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            grand += matrix[i][j];
            subj_mean[i] += matrix[i][j];
            cond_mean[j] += matrix[i][j];
        }
    grand /= n * k;
    for (auto& v : subj_mean) v /= k;
    for (auto& v : cond_mean) v /= n;

    double ss_cond = 0.0, ss_err = 0.0;
    for (int j = 0; j < k; ++j)
        ss_cond += (cond_mean[j] - grand) * (cond_mean[j] - grand);
    ss_cond *= n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            const double r = matrix[i][j] - subj_mean[i] - cond_mean[j] + grand;
            ss_err += r * r;
        }

    RmAnovaTable tab;
    tab.n = n;
    tab.k = k;
    tab.df1 = k - 1;
    tab.df2 = static_cast<double>(k - 1) * (n - 1);
    const double ms_cond = ss_cond / tab.df1;
    const double ms_err = ss_err / tab.df2;
    require(ms_err >= 0.0, "rm_anova: negative error mean square");
    tab.F = (ms_err == 0.0) ? (ms_cond == 0.0 ? 0.0 : INFINITY) : ms_cond / ms_err;

    // Greenhouse-Geisser epsilon from the double-centered covariance matrix
    std::vector<std::vector<double>> cov(k, std::vector<double>(k, 0.0));
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += (matrix[i][a] - cond_mean[a]) * (matrix[i][b] - cond_mean[b]);
            cov[a][b] = s / (n - 1);
        }
    std::vector<double> row_mean(k, 0.0);
    double all_mean = 0.0;
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) row_mean[a] += cov[a][b];
        row_mean[a] /= k;
        all_mean += row_mean[a];
    }
    all_mean /= k;
    double trace = 0.0, sumsq = 0.0;
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            const double c = cov[a][b] - row_mean[a] - row_mean[b] + all_mean;
            if (a == b) trace += c;
            sumsq += c * c;
        }
    require(sumsq > 0.0, "rm_anova: degenerate covariance");
    tab.epsilon = trace * trace / ((k - 1) * sumsq);
    tab.epsilon = std::min(1.0, std::max(1.0 / (k - 1), tab.epsilon));

    tab.p_corrected = std::isinf(tab.F)
                          ? 0.0
                          : f_sf(tab.F, tab.epsilon * tab.df1, tab.epsilon * tab.df2);
    return tab;
}

ValidationReport validate_power_matrix(const std::vector<std::vector<double>>& matrix,
                                       double q) {
    require(!matrix.empty() && matrix.front().size() == 4,
            "validate: expected a subjects x 4-condition matrix");
    ValidationReport rep;
    rep.q = q;
    rep.anova = rm_anova_gg(matrix);

    const int n = static_cast<int>(matrix.size());
    std::vector<double> pvals;
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            std::vector<double> xa(n), xb(n);
            for (int i = 0; i < n; ++i) {
                xa[i] = matrix[i][a];
                xb[i] = matrix[i][b];
            }
            PairwiseComparison c;
            c.cond_a = a;
            c.cond_b = b;
            const auto t = paired_t(xa, xb);
            c.t = t.t;
            c.df = t.df;
            c.p_raw = t.p;
            rep.pairwise.push_back(c);
            pvals.push_back(t.p);
        }
    }
    const auto fdr = bh_fdr(pvals, q);
    for (size_t i = 0; i < rep.pairwise.size(); ++i) {
        rep.pairwise[i].p_adjusted = fdr.p_adjusted[i];
        rep.pairwise[i].significant = fdr.reject[i];
    }
    return rep;
}

ValidationReport validate_dataset(
    const std::vector<data::SubjectDataset>& datasets,
    const std::function<double(const dsp::RawEpoch&)>& alpha_power_fn, double q) {
    require(datasets.size() >= 2, "validate_dataset: need at least two subjects");
    std::vector<std::vector<double>> matrix;
    for (const auto& subj : datasets) {
        std::vector<double> sums(4, 0.0);
        std::vector<int> counts(4, 0);
        for (const auto& r : subj.records) {
            require(!r.is_map, "validate_dataset: needs raw epochs");
            const int c = static_cast<int>(r.raw.condition);
            sums[c] += alpha_power_fn(r.raw);
            counts[c] += 1;
        }
        std::vector<double> row(4);
        for (int c = 0; c < 4; ++c) {
            require(counts[c] > 0, "validate_dataset: subject " +
                                       std::to_string(subj.subject_id) +
                                       " missing condition " + std::to_string(c));
            row[c] = sums[c] / counts[c];
        }
        matrix.push_back(std::move(row));
    }
    return validate_power_matrix(matrix, q);
}

std::string stats_report_csv(const ValidationReport& report) {
    std::ostringstream os;
    os << "comparison,statistic,df,epsilon,p_raw,p_adjusted,significant_flag\n";
    char buf[256];
    const auto& a = report.anova;
    std::snprintf(buf, sizeof(buf), "anova,%.9g,\"%.6g;%.6g\",%.9g,%.9g,%.9g,%d\n", a.F,
                  a.epsilon * a.df1, a.epsilon * a.df2, a.epsilon, a.p_corrected,
                  a.p_corrected, a.p_corrected < report.q ? 1 : 0);
    os << buf;
    for (const auto& c : report.pairwise) {
        std::snprintf(buf, sizeof(buf), "%s_vs_%s,%.9g,%d,,%.9g,%.9g,%d\n",
                      dsp::condition_name(static_cast<dsp::Condition>(c.cond_a)),
                      dsp::condition_name(static_cast<dsp::Condition>(c.cond_b)), c.t,
                      c.df, c.p_raw, c.p_adjusted, c.significant ? 1 : 0);
        os << buf;
    }
    return os.str();
}

}  // namespace efn::stats
