#pragma once

// extract / report / synth commands.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "phenosig/config.hpp"
#include "phenosig/synth.hpp"

namespace phenosig {

/// Valid window counts for one subject, as in the cohort description table.
struct WindowCounts {
    std::size_t mov_awake = 0;  // 10-minute acc windows
    std::size_t hrv_awake = 0;  // 1-hour RR windows
    std::size_t mov_asleep = 0;
    std::size_t hrv_asleep = 0;
    std::size_t rr_rejected = 0;  // RR windows below the coverage threshold
    std::size_t degenerate = 0;   // feature values skipped for degenerate input
};

/// Everything derived from one subject directory.
struct SubjectFeatures {
    std::string subject_id;
    Group group = Group::control;
    std::vector<FeatureRecord> records;  // window order, catalog order within a window
    SubjectSummary summary;
    WindowCounts counts;
    std::vector<std::string> warnings;
};

/// Ingests, cleans, segments and extracts every catalog feature.
SubjectFeatures extract_subject(const std::filesystem::path& subject_dir, const Config& config);

struct ExtractOutcome {
    std::filesystem::path dir;
    std::string subject_id;
    bool ok = false;
    bool cached = false;
    std::string error;
    WindowCounts counts;
    Group group = Group::control;
};

struct ExtractOptions {
    std::filesystem::path out_dir = "phenosig_out";
    bool force = false;
    unsigned jobs = 1;
};

/// Per-subject output files under out_dir/features/.
std::filesystem::path features_csv_path(const std::filesystem::path& out_dir, const std::string& subject_id);
std::filesystem::path summary_json_path(const std::filesystem::path& out_dir, const std::string& subject_id);
std::filesystem::path meta_json_path(const std::filesystem::path& out_dir, const std::string& subject_id);

/// Cache key of a subject: the extraction fingerprint plus name, size and
/// modification time of each input file.
std::string subject_cache_key(const std::filesystem::path& subject_dir, const Config& config);

/// Runs extraction over config.subjects with a worker pool. A subject whose
/// outputs carry the current cache key is skipped unless `force`. Failures
/// are recorded in the outcome and never stop the run.
std::vector<ExtractOutcome> cmd_extract(const Config& config, const ExtractOptions& options);

/// Per-subject window counts with group mean +- std rows.
std::string format_window_counts(const std::vector<ExtractOutcome>& outcomes);

class MissingInputError : public std::runtime_error {
public:
    MissingInputError(const std::string& what, std::vector<std::string> missing)
        : std::runtime_error(what), missing_subjects(std::move(missing))
    {
    }
    std::vector<std::string> missing_subjects;
};

/// Loads per-subject summaries written by extract; window statistics are
/// recomputed from the feature CSV with the config's aggregation params.
std::vector<SubjectSummary> load_summaries(const Config& config, const std::filesystem::path& out_dir);

struct ReportOutputs {
    std::filesystem::path markdown;
    std::filesystem::path csv;
    std::filesystem::path boxplots;
    std::vector<TestResult> results;
};

/// Writes report.md, report.csv and boxplots.json to out_dir. Throws
/// MissingInputError naming the subjects without extract outputs.
ReportOutputs cmd_report(const Config& config, const std::filesystem::path& out_dir);

std::vector<SubjectTruth> cmd_synth(const std::filesystem::path& spec_file, std::uint64_t seed,
                                    const std::filesystem::path& out_dir, unsigned jobs = 1);

}  // namespace phenosig
