#pragma once

// Rendering of comparison results: Markdown/CSV tables and boxplot JSON.

#include <span>
#include <string>

#include "phenosig/stats.hpp"

namespace phenosig {

/// Decimal places used for a table cell whose median is `v`:
/// 0 for |v| >= 1000, 2 for |v| >= 1, 3 otherwise.
int cell_decimals(double v);

/// "median (IQR)" with both numbers at the median's precision, e.g. "6.87 (1.24)".
std::string format_median_iqr(double median, double iqr);

/// "<0.001" below 0.001, else three decimals; "n/a" for skipped tests.
std::string format_p(double p);

/// Label in the tables' style: "acc_STE_std" -> "acc STE std".
std::string display_name(const std::string& feature);

std::string render_markdown(std::span<const TestResult> results, double alpha = 0.05);

/// Columns: feature,state,control,patient,p_raw,p_adjusted,significant
/// (plus n_control,n_patient,u_statistic). Numbers use shortest round-trip text.
std::string render_csv(std::span<const TestResult> results);

/// JSON array of {feature, state, group, median, q1, q3, whisker_lo,
/// whisker_hi, outliers[]} over every non-empty group sample.
std::string render_boxplot_json(std::span<const TestResult> results);

}  // namespace phenosig
