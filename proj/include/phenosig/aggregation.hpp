#pragma once

// Per-subject summaries of window features and day-level activity stats.

#include <span>
#include <vector>

#include "phenosig/data_model.hpp"

namespace phenosig {

struct AggregationParams {
    /// Delta degrees of freedom for standard deviations: 0 population, 1 sample.
    int std_ddof = 0;
};

/// Mean and std of `values`; std is left empty for fewer than two values.
/// Summation runs over the sorted values so input order never matters.
FeatureStat describe(std::span<const double> values, int ddof = 0);

/// Mean/std per (feature, state) over all windows. Records may arrive in any
/// order; the result does not depend on it. Pairs without windows stay empty.
SubjectSummary summarize_subject(std::span<const FeatureRecord> records, const std::string& subject_id, Group group,
                                 const AggregationParams& params = {});

struct DailyRules {
    double min_recorded_hours = 20.0;
    std::size_t min_qualifying_days = 30;
};

/// Local day bookkeeping behind daily_stats.
struct DayRecord {
    std::int64_t day = 0;  // local day index
    int recorded_hours = 0;
    TimeMs asleep_ms = 0;
    TimeMs awake_ms = 0;
    std::int64_t steps = 0;
};

/// Per local day: recorded hours (hour slots touched by a covered range),
/// asleep/awake time within the covered ranges, and total steps.
std::vector<DayRecord> tally_days(const SleepSchedule& sleep, std::span<const TimeRange> coverage,
                                  std::span<const StepRecord> steps, UtcOffset tz);

/// Sleep/wake ratio and steps-per-day statistics over days with at least
/// `min_recorded_hours` recorded. `coverage` lists the valid motion windows.
/// Days with no awake time are left out of the ratio statistics.
DailyStats daily_stats(const SleepSchedule& sleep, std::span<const TimeRange> coverage,
                       std::span<const StepRecord> steps, UtcOffset tz, const DailyRules& rules = {},
                       int std_ddof = 0);

}  // namespace phenosig
