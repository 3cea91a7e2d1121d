#pragma once

// Group comparisons: Mann-Whitney U, Benjamini-Hochberg, boxplot statistics.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "phenosig/data_model.hpp"

namespace phenosig {

class StatsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class UMethod { exact, normal };

struct MannWhitneyResult {
    double u_a = 0.0;  // U of the first sample: R_a - n_a (n_a + 1) / 2
    double u_b = 0.0;  // n_a n_b - u_a
    double p = 1.0;    // two-tailed
    UMethod method = UMethod::normal;
};

/// Two-tailed Mann-Whitney U test with midranks. The exact null distribution
/// is used when min(n_a, n_b) <= `exact_max_n` and there are no ties;
/// otherwise the normal approximation with tie-corrected variance and
/// continuity correction. Throws StatsError when either sample has fewer
/// than two values.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b, std::size_t exact_max_n = 8);

/// P(U <= u) under H0 for sample sizes n, m (no ties).
double exact_u_cdf(std::size_t n, std::size_t m, double u);

/// Step-up adjustment: q_(i) = min_{j >= i} (m / j) p_(j), capped at 1,
/// in the input order. Throws StatsError for p outside [0, 1].
std::vector<double> benjamini_hochberg(std::span<const double> p);

/// Quantile with linear interpolation between order statistics of a sorted
/// sample (h = (n - 1) q).
double quantile_sorted(std::span<const double> sorted, double q);

struct BoxplotStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_lo = 0.0;
    double whisker_hi = 0.0;
    std::vector<double> outliers;  // ascending
};

/// Whiskers reach the most extreme data within 1.5 IQR of the quartiles.
BoxplotStats boxplot_stats(std::span<const double> sample);

// ---------------------------------------------------------------------------
// Cohort comparisons

enum class Statistic { mean, std };
std::string_view to_string(Statistic s);

/// Test block: one BH family per block by default.
enum class Block { awake, asleep, daily };
std::string_view to_string(Block b);

enum class DailyMeasure { sleep_wake_ratio, steps_per_day };
std::string_view to_string(DailyMeasure d);

struct TestResult {
    std::string feature;  // e.g. "acc_STE_std", "sleep_wake_ratio_mean"
    Block block = Block::awake;
    std::size_t n_control = 0;
    std::size_t n_patient = 0;
    double control_median = 0.0;
    double control_iqr = 0.0;
    double patient_median = 0.0;
    double patient_iqr = 0.0;
    double u_statistic = 0.0;  // U of the control sample
    double p_raw = 1.0;
    double p_adjusted = 1.0;
    bool significant = false;
    bool skipped = false;  // a group had fewer than two values; no test run
    std::vector<double> control_values;
    std::vector<double> patient_values;
};

enum class FamilyScope { per_block, global };

struct ComparisonConfig {
    double alpha = 0.05;
    FamilyScope families = FamilyScope::per_block;
    /// Feature families tested; defaults to the whole catalog.
    std::vector<Feature> features{kAllFeatures.begin(), kAllFeatures.end()};
    bool include_daily = true;
};

/// One test per (feature, statistic, state) plus sleep/wake-ratio and steps
/// tests over daily-eligible subjects, BH-adjusted within each family.
/// Throws StatsError when a group has fewer than two subjects.
std::vector<TestResult> run_comparisons(std::span<const SubjectSummary> summaries, const ComparisonConfig& config = {});

}  // namespace phenosig
