#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace efn::stats {

// regularized incomplete beta function I_x(a, b)
double ibeta(double a, double b, double x);

// two-sided p of a Student-t statistic with df degrees of freedom
double t_sf_two_sided(double t, double df);

// upper tail of the F distribution
double f_sf(double f, double df1, double df2);

struct TTestResult {
    double t = 0.0;
    int df = 0;
    double p = 1.0;  // two-sided
};

// paired t-test on equal-length vectors; errors on zero-variance differences
TTestResult paired_t(const std::vector<double>& x, const std::vector<double>& y);

struct FdrResult {
    std::vector<bool> reject;
    std::vector<double> p_adjusted;
};

// Benjamini-Hochberg step-up at level q
FdrResult bh_fdr(const std::vector<double>& pvalues, double q);

struct RmAnovaTable {
    int n = 0;  // subjects
    int k = 0;  // conditions
    double F = 0.0;
    double df1 = 0.0, df2 = 0.0;          // uncorrected k-1, (k-1)(n-1)
    double epsilon = 1.0;                 // Greenhouse-Geisser
    double p_corrected = 1.0;             // from F at (eps*df1, eps*df2)
};

// one-way repeated-measures ANOVA over a subjects x conditions matrix
RmAnovaTable rm_anova_gg(const std::vector<std::vector<double>>& matrix);

struct PairwiseComparison {
    int cond_a = 0, cond_b = 0;
    double t = 0.0;
    int df = 0;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
    bool significant = false;
};

struct ValidationReport {
    RmAnovaTable anova;
    std::vector<PairwiseComparison> pairwise;  // all 6 condition pairs
    double q = 0.05;
};

// omnibus ANOVA + all pairwise paired t-tests with BH-FDR correction on a
// per-subject per-condition mean alpha-power matrix (n x 4)
ValidationReport validate_power_matrix(const std::vector<std::vector<double>>& matrix,
                                       double q = 0.05);

// computes the matrix from raw datasets via the supplied alpha-power function
ValidationReport validate_dataset(
    const std::vector<data::SubjectDataset>& datasets,
    const std::function<double(const dsp::RawEpoch&)>& alpha_power_fn, double q = 0.05);

// CSV: comparison, statistic, df, epsilon, p_raw, p_adjusted, significant_flag
std::string stats_report_csv(const ValidationReport& report);

}  // namespace efn::stats
