#pragma once

// Subject directory parsing, RR cleaning and window segmentation.

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "phenosig/data_model.hpp"

namespace phenosig {

class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Manifest {
    std::string subject_id;
    Group group = Group::control;
    UtcOffset timezone;
    /// Inclusive local dates; data outside is dropped when set.
    std::optional<std::int64_t> recording_first_day;
    std::optional<std::int64_t> recording_last_day;
    double motion_rate_hz = 20.0;

    /// Samples a complete 10-minute motion window holds at the nominal rate.
    std::size_t expected_motion_count() const;
};

Manifest parse_manifest(const std::filesystem::path& file);
std::string manifest_to_json(const Manifest& m);

struct SubjectData {
    Manifest manifest;
    std::vector<RawSample> acc;
    std::vector<RawSample> gyr;
    std::vector<RawRRSample> rr;
    SleepSchedule sleep;
    std::vector<StepRecord> steps;
    std::vector<std::string> warnings;
};

/// Fraction of malformed data lines tolerated per file (exclusive).
inline constexpr double kMaxMalformedFraction = 0.01;

/// Reads `manifest.json`, `acc.csv`, `gyr.csv`, `rr.csv`, `sleep.csv` and
/// `steps.csv` from `dir`. Missing stream files yield empty streams plus a
/// warning. Throws IngestError on a missing manifest, on a file with more
/// than 1% malformed lines, or on two rows sharing a timestamp with
/// different values.
SubjectData parse_subject_dir(const std::filesystem::path& dir);

// Individual file readers; same error rules as parse_subject_dir. Each
// returns rows sorted by time and appends a warning per skipped line group.
std::vector<RawSample> read_motion_csv(const std::filesystem::path& file, std::vector<std::string>& warnings);
std::vector<RawRRSample> read_rr_csv(const std::filesystem::path& file, std::vector<std::string>& warnings);
SleepSchedule read_sleep_csv(const std::filesystem::path& file, std::vector<std::string>& warnings);
std::vector<StepRecord> read_steps_csv(const std::filesystem::path& file, std::vector<std::string>& warnings);

void write_motion_csv(const std::filesystem::path& file, std::span<const RawSample> samples);
void write_rr_csv(const std::filesystem::path& file, std::span<const RawRRSample> samples);
void write_sleep_csv(const std::filesystem::path& file, const SleepSchedule& sleep);
void write_steps_csv(const std::filesystem::path& file, std::span<const StepRecord> steps);

// ---------------------------------------------------------------------------
// RR cleaning

struct RRCleaningParams {
    double min_rr_ms = kMinRRMs;
    double max_rr_ms = kMaxRRMs;
    /// Unexplained gaps longer than this start a new segment instead of
    /// being filled with interpolated beats.
    double max_fill_ms = 5000.0;
};

/// Collapses runs of identical consecutive values to their first sample.
std::vector<RawRRSample> drop_consecutive_duplicates(std::span<const RawRRSample> raw);

/// Drops intervals outside [min_rr_ms, max_rr_ms].
std::vector<RawRRSample> drop_out_of_range(std::span<const RawRRSample> samples,
                                           const RRCleaningParams& params = {});

/// Rebuilds a beat sequence from range-checked interval samples. Each sample
/// is a beat whose interval ended at (about) its timestamp. Elapsed time
/// between consecutive beats that the interval does not explain is filled
/// with interpolated beats whose intervals vary linearly between the two
/// neighbours and sum exactly to the gap. Beat times accumulate intervals
/// within a segment, so the time base is conserved.
std::vector<Beat> interpolate_gaps(std::span<const RawRRSample> samples, const RRCleaningParams& params = {});

/// Same as above for already-cleaned beats; a fixed point for its own output.
std::vector<Beat> interpolate_gaps(std::span<const Beat> beats, const RRCleaningParams& params = {});

/// Full cleaning: duplicates, then range, then interpolation. Empty when
/// fewer than two valid samples remain.
std::vector<Beat> clean_rr(std::span<const RawRRSample> raw, const RRCleaningParams& params = {});

// ---------------------------------------------------------------------------
// Segmentation

struct TaggedMotionWindow {
    MotionWindow window;
    State state = State::awake;
};

struct RRWindowCandidate {
    TimeRange range;
    State state = State::awake;
    std::span<const Beat> beats;
};

struct Segmentation {
    TimeMs grid_origin_ms = 0;
    std::vector<TaggedMotionWindow> acc;
    std::vector<TaggedMotionWindow> gyr;
    std::vector<RRWindowCandidate> rr;
    /// Step buckets outside every exclusion range.
    std::vector<StepRecord> steps;
};

struct SegmentationInput {
    std::span<const RawSample> acc;
    std::span<const RawSample> gyr;
    std::span<const Beat> beats;
    std::span<const StepRecord> steps;
    UtcOffset timezone;
    std::size_t expected_motion_count = 12000;
};

/// A window is asleep when at least half of it overlaps sleep.
State tag_state(const TimeRange& window, const SleepSchedule& sleep);

/// Cuts the streams into 10-minute motion windows and 1-hour HRV windows on a
/// clock-aligned grid starting at the first local hour boundary at or after
/// the earliest sample. Only windows holding at least one sample are
/// emitted. Windows intersecting an exclusion range are dropped. Returned
/// windows view into the input spans.
Segmentation segment_windows(const SegmentationInput& input, const SleepSchedule& sleep,
                             std::span<const TimeRange> exclusions);

}  // namespace phenosig
