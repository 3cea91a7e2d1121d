#pragma once

// Versioned JSON run configuration for extract/report.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "phenosig/aggregation.hpp"
#include "phenosig/features_nonlinear.hpp"
#include "phenosig/ingestion.hpp"
#include "phenosig/stats.hpp"

namespace phenosig {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inclusive local calendar dates.
struct DateRange {
    std::int64_t first_day = 0;
    std::int64_t last_day = 0;
};

struct FeatureParams {
    SampEnParams sampen;
    int higuchi_kmax = 10;
    int mfd_max_scale = 32;
    LombScargleParams lomb_scargle;
    RRCleaningParams rr_cleaning;
    double min_rr_coverage = 0.9;
    double min_motion_fraction = 0.9;
};

struct Config {
    int version = 1;
    /// Subject directories, resolved against the config file's directory.
    std::vector<std::filesystem::path> subjects;
    std::vector<DateRange> exclusions;
    FeatureParams features;
    AggregationParams aggregation;
    DailyRules daily;
    ComparisonConfig comparison;
};

/// Parses a config document. Relative paths resolve against `base_dir`; a
/// `data_dir` entry expands to every subdirectory holding a manifest.json,
/// in name order. Throws ConfigError on any malformed or inconsistent value.
Config parse_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
Config load_config(const std::filesystem::path& file);

/// Canonical JSON of everything that influences extracted features; part of
/// the extract cache key.
std::string extraction_fingerprint(const Config& config);

/// Exclusion ranges as absolute times in the subject's timezone.
std::vector<TimeRange> exclusion_ranges(const Config& config, UtcOffset tz);

}  // namespace phenosig
