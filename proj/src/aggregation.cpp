#include "phenosig/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace phenosig {

FeatureStat describe(std::span<const double> values, int ddof)
{
    FeatureStat st;
    st.count = values.size();
    if (values.empty()) return st;
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    st.mean = sum / static_cast<double>(v.size());
    if (v.size() >= 2 && static_cast<std::size_t>(ddof) < v.size()) {
        double ss = 0.0;
        for (double x : v) ss += (x - st.mean) * (x - st.mean);
        st.stddev = std::sqrt(ss / static_cast<double>(v.size() - static_cast<std::size_t>(ddof)));
    }
    return st;
}

SubjectSummary summarize_subject(std::span<const FeatureRecord> records, const std::string& subject_id, Group group,
                                 const AggregationParams& params)
{
    std::array<std::array<std::vector<double>, 2>, kFeatureCount> values;
    for (const FeatureRecord& r : records) {
        if (!std::isfinite(r.value)) continue;
        values[static_cast<std::size_t>(r.feature)][static_cast<std::size_t>(r.state)].push_back(r.value);
    }
    SubjectSummary s;
    s.subject_id = subject_id;
    s.group = group;
    for (Feature f : kAllFeatures) {
        for (State st : kAllStates) {
            const auto& v = values[static_cast<std::size_t>(f)][static_cast<std::size_t>(st)];
            if (!v.empty()) s.at(f, st) = describe(v, params.std_ddof);
        }
    }
    return s;
}

namespace {

std::vector<TimeRange> merge_ranges(std::span<const TimeRange> ranges)
{
    std::vector<TimeRange> sorted(ranges.begin(), ranges.end());
    std::sort(sorted.begin(), sorted.end(), [](const TimeRange& a, const TimeRange& b) {
        return a.start_ms < b.start_ms || (a.start_ms == b.start_ms && a.end_ms < b.end_ms);
    });
    std::vector<TimeRange> out;
    for (const TimeRange& r : sorted) {
        if (r.end_ms <= r.start_ms) continue;
        if (!out.empty() && r.start_ms <= out.back().end_ms)
            out.back().end_ms = std::max(out.back().end_ms, r.end_ms);
        else
            out.push_back(r);
    }
    return out;
}

}  // namespace

std::vector<DayRecord> tally_days(const SleepSchedule& sleep, std::span<const TimeRange> coverage,
                                  std::span<const StepRecord> steps, UtcOffset tz)
{
    std::map<std::int64_t, DayRecord> days;
    std::map<std::int64_t, std::array<bool, 24>> hours;
    for (const TimeRange& r : merge_ranges(coverage)) {
        // split at local midnights
        TimeMs t = r.start_ms;
        while (t < r.end_ms) {
            const std::int64_t day = local_day(t, tz);
            const TimeMs day_end = local_midnight(day + 1, tz);
            const TimeRange piece{t, std::min(r.end_ms, day_end)};
            DayRecord& d = days[day];
            d.day = day;
            const TimeMs asleep = sleep.asleep_overlap(piece);
            d.asleep_ms += asleep;
            d.awake_ms += piece.duration() - asleep;
            auto& h = hours[day];
            const TimeMs midnight = local_midnight(day, tz);
            const auto first_hour = (piece.start_ms - midnight) / kMsPerHour;
            const auto last_hour = (piece.end_ms - 1 - midnight) / kMsPerHour;
            for (auto hr = first_hour; hr <= last_hour; ++hr) h[static_cast<std::size_t>(hr)] = true;
            t = piece.end_ms;
        }
    }
    for (const StepRecord& s : steps) {
        auto it = days.find(local_day(s.bucket_start_ms, tz));
        if (it != days.end()) it->second.steps += s.steps;
    }
    std::vector<DayRecord> out;
    out.reserve(days.size());
    for (auto& [day, rec] : days) {
        rec.recorded_hours = static_cast<int>(std::count(hours[day].begin(), hours[day].end(), true));
        out.push_back(rec);
    }
    return out;
}

DailyStats daily_stats(const SleepSchedule& sleep, std::span<const TimeRange> coverage,
                       std::span<const StepRecord> steps, UtcOffset tz, const DailyRules& rules, int std_ddof)
{
    std::vector<double> ratios, step_counts;
    DailyStats out;
    for (const DayRecord& d : tally_days(sleep, coverage, steps, tz)) {
        if (static_cast<double>(d.recorded_hours) < rules.min_recorded_hours) continue;
        ++out.qualifying_days;
        step_counts.push_back(static_cast<double>(d.steps));
        if (d.awake_ms > 0) ratios.push_back(static_cast<double>(d.asleep_ms) / static_cast<double>(d.awake_ms));
    }
    out.eligible = out.qualifying_days >= rules.min_qualifying_days;
    if (!ratios.empty()) {
        const FeatureStat r = describe(ratios, std_ddof);
        out.sleep_wake_ratio_mean = r.mean;
        out.sleep_wake_ratio_std = r.stddev;
    }
    if (!step_counts.empty()) {
        const FeatureStat s = describe(step_counts, std_ddof);
        out.steps_per_day_mean = s.mean;
        out.steps_per_day_std = s.stddev;
    }
    return out;
}

}  // namespace phenosig
