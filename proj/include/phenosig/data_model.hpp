#pragma once

// Domain types shared by every stage of the pipeline.
//
// Absolute times are integer milliseconds since the Unix epoch. Calendar
// semantics (local days, hour grid, exclusion dates) use a fixed UTC offset
// carried per subject.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace phenosig {

using TimeMs = std::int64_t;

inline constexpr TimeMs kMsPerSecond = 1000;
inline constexpr TimeMs kMsPerMinute = 60 * kMsPerSecond;
inline constexpr TimeMs kMsPerHour = 60 * kMsPerMinute;
inline constexpr TimeMs kMsPerDay = 24 * kMsPerHour;

inline constexpr TimeMs kMotionWindowMs = 10 * kMsPerMinute;
inline constexpr TimeMs kHrvWindowMs = kMsPerHour;
inline constexpr TimeMs kStepBucketMs = 10 * kMsPerMinute;

inline constexpr double kMinRRMs = 300.0;
inline constexpr double kMaxRRMs = 2000.0;

/// Errors raised for malformed values (bad enum names, bad dates, broken
/// invariants at construction).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Enumerations

enum class Sensor { acc, gyr };
enum class State { awake, asleep };
enum class Group { control, patient };

/// Closed catalog of per-window features.
enum class Feature {
    acc_STE,
    gyr_STE,
    sampen,
    higuchi,
    mfd_fd1,
    mfd_min,
    mfd_max,
    mfd_mean,
    mfd_std,
    sd1,
    sd2,
    lf_power,
    hf_power,
    lf_hf_ratio,
};

inline constexpr std::size_t kFeatureCount = 14;
inline constexpr std::array<Feature, kFeatureCount> kAllFeatures = {
    Feature::acc_STE,  Feature::gyr_STE,  Feature::sampen,   Feature::higuchi,
    Feature::mfd_fd1,  Feature::mfd_min,  Feature::mfd_max,  Feature::mfd_mean,
    Feature::mfd_std,  Feature::sd1,      Feature::sd2,      Feature::lf_power,
    Feature::hf_power, Feature::lf_hf_ratio,
};
inline constexpr std::array<State, 2> kAllStates = {State::awake, State::asleep};

std::string_view to_string(Sensor s);
std::string_view to_string(State s);
std::string_view to_string(Group g);
std::string_view to_string(Feature f);

Sensor parse_sensor(std::string_view text);
State parse_state(std::string_view text);
Group parse_group(std::string_view text);
Feature parse_feature(std::string_view text);

// ---------------------------------------------------------------------------
// Time helpers

/// Half-open absolute time range [start_ms, end_ms).
struct TimeRange {
    TimeMs start_ms = 0;
    TimeMs end_ms = 0;

    TimeMs duration() const { return end_ms - start_ms; }
    bool contains(TimeMs t) const { return t >= start_ms && t < end_ms; }
    bool intersects(const TimeRange& o) const { return start_ms < o.end_ms && o.start_ms < end_ms; }
    TimeMs overlap(const TimeRange& o) const;

    friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

/// Fixed offset from UTC, e.g. "+02:00". DST is not modelled.
struct UtcOffset {
    std::int32_t minutes = 0;

    TimeMs ms() const { return static_cast<TimeMs>(minutes) * kMsPerMinute; }
    friend bool operator==(const UtcOffset&, const UtcOffset&) = default;
};

/// Accepts "UTC", "Z", "+HH:MM", "-HH:MM", "+HHMM".
UtcOffset parse_utc_offset(std::string_view text);
std::string format_utc_offset(UtcOffset offset);

/// Days since 1970-01-01 for a proleptic Gregorian "YYYY-MM-DD" date.
std::int64_t parse_iso_date(std::string_view text);
std::string format_iso_date(std::int64_t days_since_epoch);

/// Local calendar day index of an absolute time.
std::int64_t local_day(TimeMs t, UtcOffset tz);
/// Absolute time of local midnight starting the given local day.
TimeMs local_midnight(std::int64_t day, UtcOffset tz);
/// Smallest local hour boundary >= t.
TimeMs next_local_hour(TimeMs t, UtcOffset tz);

/// Inclusive local date range [first, last] as an absolute half-open range.
TimeRange local_date_range(std::int64_t first_day, std::int64_t last_day, UtcOffset tz);

// ---------------------------------------------------------------------------
// Raw streams

struct RawSample {
    TimeMs t_ms = 0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const RawSample&, const RawSample&) = default;
};

struct RawRRSample {
    TimeMs t_ms = 0;
    double rr_ms = 0.0;

    friend bool operator==(const RawRRSample&, const RawRRSample&) = default;
};

/// One heartbeat after cleaning: absolute beat time and the interval ending
/// at it. Beat times may be fractional milliseconds when interpolated.
struct Beat {
    double t_ms = 0.0;
    double rr_ms = 0.0;

    friend bool operator==(const Beat&, const Beat&) = default;
};

struct StepRecord {
    TimeMs bucket_start_ms = 0;
    std::int64_t steps = 0;

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Intervals labelled asleep. Sorted, non-overlapping, each end > start.
class SleepSchedule {
public:
    SleepSchedule() = default;
    /// Sorts the intervals; throws DomainError on overlap or empty intervals.
    explicit SleepSchedule(std::vector<TimeRange> intervals);

    const std::vector<TimeRange>& intervals() const { return intervals_; }
    /// Milliseconds of `range` covered by sleep.
    TimeMs asleep_overlap(const TimeRange& range) const;

    friend bool operator==(const SleepSchedule&, const SleepSchedule&) = default;

private:
    std::vector<TimeRange> intervals_;
};

// ---------------------------------------------------------------------------
// Windows

/// Ten minutes of tri-axial samples from one sensor. Non-owning: the samples
/// view points into the subject's stream, which must outlive the window.
struct MotionWindow {
    Sensor sensor = Sensor::acc;
    std::span<const RawSample> samples;
    TimeMs window_start_ms = 0;
    std::size_t expected_count = 12000;

    TimeRange range() const { return {window_start_ms, window_start_ms + kMotionWindowMs}; }
    /// Zero-sample windows are never valid.
    bool is_valid(double min_fraction = 0.9) const;
};

/// Validated one-hour interval series.
struct RRSeries {
    std::vector<double> beat_times;  // seconds since window_start, strictly increasing
    std::vector<double> intervals;   // ms, each in [300, 2000]
    TimeMs window_start_ms = 0;
    TimeMs window_end_ms = 0;
    double coverage_seconds = 0.0;

    friend bool operator==(const RRSeries&, const RRSeries&) = default;
};

enum class RRInvalidReason { empty, insufficient_coverage };
std::string_view to_string(RRInvalidReason r);

struct RRInvalid {
    RRInvalidReason reason = RRInvalidReason::empty;
    double coverage_seconds = 0.0;
};

using RRValidation = std::variant<RRSeries, RRInvalid>;

/// Builds an RRSeries from the beats that fall inside `window`. Intervals
/// outside [300, 2000] ms are discarded; the window is valid when the
/// remaining intervals sum to at least `min_coverage` of its length
/// (inclusive).
RRValidation validate_rr_window(std::span<const Beat> beats, const TimeRange& window,
                                double min_coverage = 0.9);
/// Re-validates an existing series against its own window.
RRValidation validate_rr_window(const RRSeries& series, double min_coverage = 0.9);
/// Absolute beats of a series.
std::vector<Beat> to_beats(const RRSeries& series);

// ---------------------------------------------------------------------------
// Features and summaries

struct FeatureRecord {
    std::string subject_id;
    Feature feature = Feature::acc_STE;
    State state = State::awake;
    TimeMs window_start_ms = 0;
    double value = 0.0;

    friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

/// CSV line `subject_id,feature_name,state,window_start_ms,value` (no newline).
std::string to_csv_line(const FeatureRecord& r);
FeatureRecord parse_feature_record(std::string_view line);
inline constexpr std::string_view kFeatureCsvHeader = "subject_id,feature_name,state,window_start_ms,value";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

struct FeatureStat {
    std::size_t count = 0;
    double mean = 0.0;
    std::optional<double> stddev;  // empty when count < 2

    friend bool operator==(const FeatureStat&, const FeatureStat&) = default;
};

struct DailyStats {
    std::size_t qualifying_days = 0;
    bool eligible = false;
    std::optional<double> sleep_wake_ratio_mean;
    std::optional<double> sleep_wake_ratio_std;
    std::optional<double> steps_per_day_mean;
    std::optional<double> steps_per_day_std;

    friend bool operator==(const DailyStats&, const DailyStats&) = default;
};

struct SubjectSummary {
    std::string subject_id;
    Group group = Group::control;
    /// Indexed [feature][state]; empty optional when no windows exist.
    std::array<std::array<std::optional<FeatureStat>, 2>, kFeatureCount> stats{};
    DailyStats daily;

    const std::optional<FeatureStat>& at(Feature f, State s) const
    {
        return stats[static_cast<std::size_t>(f)][static_cast<std::size_t>(s)];
    }
    std::optional<FeatureStat>& at(Feature f, State s)
    {
        return stats[static_cast<std::size_t>(f)][static_cast<std::size_t>(s)];
    }

    friend bool operator==(const SubjectSummary&, const SubjectSummary&) = default;
};

std::string to_json(const SubjectSummary& s);
SubjectSummary parse_subject_summary(std::string_view json_text);

}  // namespace phenosig
