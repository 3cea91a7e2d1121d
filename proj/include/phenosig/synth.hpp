#pragma once

// Synthetic two-group cohorts written in the subject directory layout.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "phenosig/data_model.hpp"

namespace phenosig {

class SynthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Log-normal level: subject means spread by subject_cv around `mean`,
/// window values spread by window_cv around the subject mean.
struct LevelModel {
    double mean = 1.0;
    double subject_cv = 0.0;
    double window_cv = 0.0;
};

struct SleepModel {
    double onset_hour = 23.0;  // local clock hour, may exceed 24
    double onset_jitter_h = 0.5;
    double duration_h = 8.0;
    double duration_sd_h = 0.5;
};

struct RRModel {
    double mean_awake_ms = 750.0;
    double mean_asleep_ms = 950.0;
    double subject_sd_ms = 40.0;
    double lf_amp_ms = 30.0;  // 0.1 Hz sinusoid
    double hf_amp_ms = 25.0;  // 0.25 Hz sinusoid
    double ar_coef = 0.5;
    LevelModel noise_awake{20.0, 0.1, 0.2};  // AR noise std per HRV window
    LevelModel noise_asleep{15.0, 0.1, 0.2};
};

struct MotionModel {
    LevelModel acc_awake{7.0, 0.15, 1.0};
    LevelModel acc_asleep{0.6, 0.2, 1.0};
    LevelModel gyr_awake{4000.0, 0.15, 1.0};
    LevelModel gyr_asleep{300.0, 0.2, 1.0};
    /// Relative per-sample jitter of the vector norm; 0 gives every sample
    /// in a window exactly the window's energy.
    double sample_noise = 0.3;
};

struct ArtifactModel {
    double out_of_range_rate = 0.0;  // per beat
    double dropout_rate = 0.0;       // per 10-minute block, all streams
};

struct GroupModel {
    std::size_t count = 0;
    SleepModel sleep;
    RRModel rr;
    MotionModel motion;
    double steps_awake_per_bucket = 80.0;
    ArtifactModel artifacts;
};

struct CohortSpec {
    int version = 1;
    std::string start_date = "2019-06-03";
    std::size_t days = 30;
    std::string timezone = "+03:00";
    /// Local clock hours during which the watch records; empty means all day.
    std::vector<int> recorded_hours;
    double motion_rate_hz = 20.0;
    double rr_rate_hz = 5.0;
    GroupModel control;
    GroupModel patient;
};

/// Parses the JSON spec; missing fields keep their defaults. Throws
/// SynthError for malformed JSON or impossible parameters.
CohortSpec parse_cohort_spec(const std::string& json_text);
std::string cohort_spec_to_json(const CohortSpec& spec);
void validate(const CohortSpec& spec);

/// Generator bookkeeping for one subject.
struct SubjectTruth {
    std::string subject_id;
    Group group = Group::control;
    std::size_t mov_awake = 0;  // complete 10-minute acc windows
    std::size_t mov_asleep = 0;
    std::size_t hrv_awake = 0;  // recorded hours without dropout
    std::size_t hrv_asleep = 0;
    std::size_t beats = 0;
    std::size_t out_of_range = 0;
    std::size_t blocks = 0;
    std::size_t dropped_blocks = 0;
};

struct TruthWindow {
    Sensor sensor = Sensor::acc;
    TimeMs window_start_ms = 0;
    State state = State::awake;
    double energy = 0.0;
};

/// In-memory subject: streams plus ground truth.
struct SyntheticSubject {
    std::string subject_id;
    Group group = Group::control;
    std::vector<RawSample> acc;
    std::vector<RawSample> gyr;
    std::vector<RawRRSample> rr;
    SleepSchedule sleep;
    std::vector<StepRecord> steps;
    SubjectTruth truth;
    std::vector<TruthWindow> windows;
};

/// Subject identifiers in generation order: C001.., then P001...
std::vector<std::pair<std::string, Group>> subject_roster(const CohortSpec& spec);

/// Deterministic in (spec, seed, subject_id) alone.
SyntheticSubject generate_subject(const CohortSpec& spec, std::uint64_t seed, const std::string& subject_id,
                                  Group group);

/// Writes the subject directory (manifest and streams) plus truth.json and
/// truth_windows.csv.
void write_subject(const CohortSpec& spec, const SyntheticSubject& subject, const std::filesystem::path& dir);

/// Generates and writes every subject under `outdir`, using `jobs` threads.
/// Returns the ground truth per subject in roster order.
std::vector<SubjectTruth> generate_cohort(const CohortSpec& spec, std::uint64_t seed,
                                          const std::filesystem::path& outdir, unsigned jobs = 1);

SubjectTruth read_truth(const std::filesystem::path& subject_dir);

}  // namespace phenosig
