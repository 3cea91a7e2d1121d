#pragma once

// Complexity measures of the interval series (tachogram, indexed by beat).

#include <cstdint>
#include <span>
#include <vector>

#include "phenosig/features_linear.hpp"

namespace phenosig {

// ---------------------------------------------------------------------------
// Sample entropy

struct SampEnParams {
    int m = 2;
    double r_factor = 0.2;  // tolerance = r_factor * population std
};

struct SampEnResult {
    std::uint64_t a = 0;  // matching (m+1)-template pairs
    std::uint64_t b = 0;  // matching m-template pairs
    double tolerance = 0.0;
    /// -ln(A/B); +infinity when A == 0.
    double value = 0.0;

    bool finite() const { return a > 0 && b > 0; }
};

/// Counts template matches under the Chebyshev distance with tolerance `r`.
/// Pairs i < j over the first N - m templates; self-matches are excluded.
/// The counts are identical to the direct double loop.
SampEnResult sample_entropy(std::span<const double> x, int m, double r);

/// Tolerance derived from the series: r = r_factor * std(x). Throws
/// DegenerateInput on zero variance or N <= m + 1.
SampEnResult sample_entropy(std::span<const double> x, const SampEnParams& params = {});

// ---------------------------------------------------------------------------
// Higuchi fractal dimension

struct HiguchiResult {
    double value = 0.0;      // clamped to [1, 2]
    double raw_slope = 0.0;  // unclamped estimate
    bool clamped = false;
};

/// Slope of ln L(k) against ln(1/k), k = 1..kmax, with the standard
/// (N-1)/(floor((N-m)/k) k) normalisation. Throws DegenerateInput for a
/// constant series or N < 10 kmax.
HiguchiResult higuchi_fd(std::span<const double> x, int kmax = 10);

// ---------------------------------------------------------------------------
// Multiscale fractal dimension (morphological covers)

struct MFDProfile {
    std::vector<int> scales;        // 1..S
    std::vector<double> local_fd;   // clamped to [1, 2]
    std::vector<double> cover_area; // A(s)
    std::size_t clamped = 0;
};

/// Cover areas A(s) = sum_n (dilation_s - erosion_s) for s = 1..S, using the
/// flat 3-sample structuring element iterated s times. The local dimension
/// at s is 2 minus the least-squares slope of ln A(sigma) on ln sigma over
/// the three scales centred at s (one-sided at both ends). Throws
/// DegenerateInput when a cover area vanishes or N < 4 S.
MFDProfile mfd_profile(std::span<const double> x, int max_scale = 32);

struct MFDSummary {
    double fd1 = 0.0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population
};

MFDSummary mfd_summaries(const MFDProfile& p);

// ---------------------------------------------------------------------------
// Poincare plot

struct PoincareResult {
    double sd1 = 0.0;
    double sd2 = 0.0;
    bool sd2_clamped = false;
};

/// sd1 = sqrt(var(dx) / 2), sd2 = sqrt(2 var(x) - var(dx) / 2), with
/// population variances. Throws DegenerateInput for fewer than 2 samples.
PoincareResult poincare(std::span<const double> x);

// ---------------------------------------------------------------------------

/// Least-squares slope of y on x.
double ls_slope(std::span<const double> x, std::span<const double> y);

}  // namespace phenosig
