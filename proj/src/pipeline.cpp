#include "phenosig/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "phenosig/aggregation.hpp"
#include "phenosig/features_linear.hpp"
#include "phenosig/features_nonlinear.hpp"
#include "phenosig/ingestion.hpp"
#include "phenosig/report.hpp"

namespace phenosig {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content)
{
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, p);
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

json counts_to_json(const WindowCounts& c)
{
    return {{"mov_awake", c.mov_awake},   {"hrv_awake", c.hrv_awake},     {"mov_asleep", c.mov_asleep},
            {"hrv_asleep", c.hrv_asleep}, {"rr_rejected", c.rr_rejected}, {"degenerate", c.degenerate}};
}

WindowCounts counts_from_json(const json& j)
{
    WindowCounts c;
    c.mov_awake = j.at("mov_awake").get<std::size_t>();
    c.hrv_awake = j.at("hrv_awake").get<std::size_t>();
    c.mov_asleep = j.at("mov_asleep").get<std::size_t>();
    c.hrv_asleep = j.at("hrv_asleep").get<std::size_t>();
    c.rr_rejected = j.at("rr_rejected").get<std::size_t>();
    c.degenerate = j.at("degenerate").get<std::size_t>();
    return c;
}

std::size_t feature_index(Feature f)
{
    return static_cast<std::size_t>(f);
}

}  // namespace

SubjectFeatures extract_subject(const fs::path& subject_dir, const Config& config)
{
    const FeatureParams& fp = config.features;
    SubjectData data = parse_subject_dir(subject_dir);
    const Manifest& man = data.manifest;
    const std::vector<Beat> beats = clean_rr(data.rr, fp.rr_cleaning);
    const std::vector<TimeRange> excl = exclusion_ranges(config, man.timezone);

    SegmentationInput in;
    in.acc = data.acc;
    in.gyr = data.gyr;
    in.beats = beats;
    in.steps = data.steps;
    in.timezone = man.timezone;
    in.expected_motion_count = man.expected_motion_count();
    const Segmentation seg = segment_windows(in, data.sleep, excl);

    SubjectFeatures out;
    out.subject_id = man.subject_id;
    out.group = man.group;
    out.warnings = std::move(data.warnings);
    auto add = [&](Feature f, State s, TimeMs start, double v) {
        if (!std::isfinite(v)) {
            ++out.counts.degenerate;
            return;
        }
        out.records.push_back({man.subject_id, f, s, start, v});
    };

    std::vector<TimeRange> coverage;
    for (const auto* windows : {&seg.acc, &seg.gyr}) {
        for (const TaggedMotionWindow& tw : *windows) {
            if (!tw.window.is_valid(fp.min_motion_fraction)) continue;
            const bool acc = tw.window.sensor == Sensor::acc;
            if (acc) (tw.state == State::asleep ? out.counts.mov_asleep : out.counts.mov_awake) += 1;
            coverage.push_back(tw.window.range());
            add(acc ? Feature::acc_STE : Feature::gyr_STE, tw.state, tw.window.window_start_ms,
                short_time_energy(tw.window, fp.min_motion_fraction));
        }
    }

    for (const RRWindowCandidate& cand : seg.rr) {
        RRValidation v = validate_rr_window(cand.beats, cand.range, fp.min_rr_coverage);
        const RRSeries* series = std::get_if<RRSeries>(&v);
        if (!series) {
            ++out.counts.rr_rejected;
            continue;
        }
        (cand.state == State::asleep ? out.counts.hrv_asleep : out.counts.hrv_awake) += 1;
        const std::span<const double> x = series->intervals;
        const TimeMs start = cand.range.start_ms;
        const State st = cand.state;
        auto guarded = [&](auto&& fn, std::size_t n_features) {
            try {
                fn();
            } catch (const DegenerateInput& e) {
                out.counts.degenerate += n_features;
                spdlog::debug("{}: window {} skipped: {}", man.subject_id, start, e.what());
            }
        };
        guarded([&] { add(Feature::sampen, st, start, sample_entropy(x, fp.sampen).value); }, 1);
        guarded([&] { add(Feature::higuchi, st, start, higuchi_fd(x, fp.higuchi_kmax).value); }, 1);
        guarded(
            [&] {
                const MFDSummary m = mfd_summaries(mfd_profile(x, fp.mfd_max_scale));
                add(Feature::mfd_fd1, st, start, m.fd1);
                add(Feature::mfd_min, st, start, m.min);
                add(Feature::mfd_max, st, start, m.max);
                add(Feature::mfd_mean, st, start, m.mean);
                add(Feature::mfd_std, st, start, m.std);
            },
            5);
        guarded(
            [&] {
                const PoincareResult p = poincare(x);
                add(Feature::sd1, st, start, p.sd1);
                add(Feature::sd2, st, start, p.sd2);
            },
            2);
        guarded(
            [&] {
                const BandPowers b = band_powers(lomb_scargle(*series, fp.lomb_scargle));
                add(Feature::lf_power, st, start, b.lf_norm);
                add(Feature::hf_power, st, start, b.hf_norm);
                add(Feature::lf_hf_ratio, st, start, b.lf_hf_ratio);
            },
            3);
    }

    std::sort(out.records.begin(), out.records.end(), [](const FeatureRecord& a, const FeatureRecord& b) {
        if (a.window_start_ms != b.window_start_ms) return a.window_start_ms < b.window_start_ms;
        return feature_index(a.feature) < feature_index(b.feature);
    });

    out.summary = summarize_subject(out.records, man.subject_id, man.group, config.aggregation);
    out.summary.daily =
        daily_stats(data.sleep, coverage, seg.steps, man.timezone, config.daily, config.aggregation.std_ddof);
    return out;
}

fs::path features_csv_path(const fs::path& out_dir, const std::string& id)
{
    return out_dir / "features" / (id + ".features.csv");
}

fs::path summary_json_path(const fs::path& out_dir, const std::string& id)
{
    return out_dir / "features" / (id + ".summary.json");
}

fs::path meta_json_path(const fs::path& out_dir, const std::string& id)
{
    return out_dir / "features" / (id + ".meta.json");
}

std::string subject_cache_key(const fs::path& subject_dir, const Config& config)
{
    std::uint64_t h = fnv1a(extraction_fingerprint(config));
    for (const char* name : {"manifest.json", "acc.csv", "gyr.csv", "rr.csv", "sleep.csv", "steps.csv"}) {
        const fs::path p = subject_dir / name;
        std::string part = name;
        std::error_code ec;
        if (fs::exists(p, ec)) {
            part += ":" + std::to_string(fs::file_size(p, ec));
            part += ":" + std::to_string(fs::last_write_time(p, ec).time_since_epoch().count());
        } else {
            part += ":absent";
        }
        h = fnv1a(part, h);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

ExtractOutcome extract_one(const fs::path& dir, const Config& config, const ExtractOptions& opt)
{
    ExtractOutcome o;
    o.dir = dir;
    try {
        const Manifest man = parse_manifest(dir / "manifest.json");
        o.subject_id = man.subject_id;
        o.group = man.group;
        const std::string key = subject_cache_key(dir, config);
        const fs::path meta = meta_json_path(opt.out_dir, man.subject_id);

        if (!opt.force && fs::exists(meta) && fs::exists(features_csv_path(opt.out_dir, man.subject_id)) &&
            fs::exists(summary_json_path(opt.out_dir, man.subject_id))) {
            try {
                const json j = json::parse(read_file(meta));
                if (j.at("cache_key").get<std::string>() == key) {
                    o.counts = counts_from_json(j.at("counts"));
                    o.ok = true;
                    o.cached = true;
                    spdlog::info("{}: cached", man.subject_id);
                    return o;
                }
            } catch (const json::exception&) {
                // unreadable meta: recompute
            }
        }

        const SubjectFeatures sf = extract_subject(dir, config);
        for (const auto& w : sf.warnings) spdlog::warn("{}: {}", sf.subject_id, w);

        std::string csv(kFeatureCsvHeader);
        csv += '\n';
        for (const FeatureRecord& r : sf.records) {
            csv += to_csv_line(r);
            csv += '\n';
        }
        write_file(features_csv_path(opt.out_dir, sf.subject_id), csv);
        write_file(summary_json_path(opt.out_dir, sf.subject_id), to_json(sf.summary));
        const json mj = {
            {"subject_id", sf.subject_id},
            {"group", to_string(sf.group)},
            {"source", dir.string()},
            {"cache_key", key},
            {"counts", counts_to_json(sf.counts)},
            {"warnings", sf.warnings},
        };
        write_file(meta, mj.dump(2) + "\n");
        o.counts = sf.counts;
        o.ok = true;
        spdlog::info("{}: {} records", sf.subject_id, sf.records.size());
    } catch (const std::exception& e) {
        o.ok = false;
        o.error = e.what();
        spdlog::error("{}: {}", dir.string(), e.what());
    }
    return o;
}

}  // namespace

std::vector<ExtractOutcome> cmd_extract(const Config& config, const ExtractOptions& options)
{
    fs::create_directories(options.out_dir / "features");
    std::vector<ExtractOutcome> outcomes(config.subjects.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < config.subjects.size(); k = next++)
            outcomes[k] = extract_one(config.subjects[k], config, options);
    };
    const unsigned n =
        std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(std::max<std::size_t>(1, config.subjects.size()))));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return outcomes;
}

std::string format_window_counts(const std::vector<ExtractOutcome>& outcomes)
{
    static constexpr const char* kLabels[4] = {"# 10 min. mov (awake)", "# 1 hour HRV (awake)",
                                               "# 10 min. mov (sleep)", "# 1 hour HRV (sleep)"};
    auto values = [](const WindowCounts& c) {
        return std::array<double, 4>{static_cast<double>(c.mov_awake), static_cast<double>(c.hrv_awake),
                                     static_cast<double>(c.mov_asleep), static_cast<double>(c.hrv_asleep)};
    };
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %-8s %22s %22s %22s %22s\n", "subject", "group", kLabels[0], kLabels[1],
                  kLabels[2], kLabels[3]);
    out += buf;
    for (const ExtractOutcome& o : outcomes) {
        if (!o.ok) {
            std::snprintf(buf, sizeof buf, "%-10s %-8s %s\n", o.subject_id.empty() ? o.dir.filename().c_str() : o.subject_id.c_str(),
                          "-", "failed");
            out += buf;
            continue;
        }
        const auto v = values(o.counts);
        std::snprintf(buf, sizeof buf, "%-10s %-8s %22.0f %22.0f %22.0f %22.0f\n", o.subject_id.c_str(),
                      std::string(to_string(o.group)).c_str(), v[0], v[1], v[2], v[3]);
        out += buf;
    }
    for (Group g : {Group::control, Group::patient}) {
        std::array<std::vector<double>, 4> cols;
        for (const ExtractOutcome& o : outcomes) {
            if (!o.ok || o.group != g) continue;
            const auto v = values(o.counts);
            for (std::size_t i = 0; i < 4; ++i) cols[i].push_back(v[i]);
        }
        if (cols[0].empty()) continue;
        std::string line;
        std::snprintf(buf, sizeof buf, "%-10s %-8s", "mean+-std", std::string(to_string(g)).c_str());
        line += buf;
        for (const auto& c : cols) {
            const FeatureStat s = describe(c);
            std::snprintf(buf, sizeof buf, " %22s", (std::to_string(std::llround(s.mean)) + " +- " +
                                                     std::to_string(std::llround(s.stddev.value_or(0.0))))
                                                        .c_str());
            line += buf;
        }
        out += line + "\n";
    }
    return out;
}

std::vector<SubjectSummary> load_summaries(const Config& config, const fs::path& out_dir)
{
    std::vector<std::string> missing;
    std::vector<std::pair<Manifest, bool>> manifests;
    for (const fs::path& dir : config.subjects) {
        try {
            const Manifest m = parse_manifest(dir / "manifest.json");
            const bool have = fs::exists(features_csv_path(out_dir, m.subject_id)) &&
                              fs::exists(summary_json_path(out_dir, m.subject_id));
            if (!have) missing.push_back(m.subject_id);
            manifests.emplace_back(m, have);
        } catch (const IngestError&) {
            missing.push_back(dir.filename().string());
        }
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& s : missing) names += (names.empty() ? "" : ", ") + s;
        throw MissingInputError("missing extract outputs for: " + names, missing);
    }

    std::vector<SubjectSummary> out;
    for (const auto& [m, have] : manifests) {
        const std::string text = read_file(features_csv_path(out_dir, m.subject_id));
        std::vector<FeatureRecord> records;
        std::size_t pos = text.find('\n');
        if (pos == std::string::npos || std::string_view(text).substr(0, pos) != kFeatureCsvHeader)
            throw std::runtime_error(features_csv_path(out_dir, m.subject_id).string() + ": bad header");
        ++pos;
        while (pos < text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string::npos) end = text.size();
            if (end > pos) records.push_back(parse_feature_record(std::string_view(text).substr(pos, end - pos)));
            pos = end + 1;
        }
        SubjectSummary s = summarize_subject(records, m.subject_id, m.group, config.aggregation);
        s.daily = parse_subject_summary(read_file(summary_json_path(out_dir, m.subject_id))).daily;
        out.push_back(std::move(s));
    }
    return out;
}

ReportOutputs cmd_report(const Config& config, const fs::path& out_dir)
{
    const std::vector<SubjectSummary> summaries = load_summaries(config, out_dir);
    ReportOutputs r;
    r.results = run_comparisons(summaries, config.comparison);
    fs::create_directories(out_dir);
    r.markdown = out_dir / "report.md";
    r.csv = out_dir / "report.csv";
    r.boxplots = out_dir / "boxplots.json";
    write_file(r.markdown, render_markdown(r.results, config.comparison.alpha));
    write_file(r.csv, render_csv(r.results));
    write_file(r.boxplots, render_boxplot_json(r.results));
    return r;
}

std::vector<SubjectTruth> cmd_synth(const fs::path& spec_file, std::uint64_t seed, const fs::path& out_dir,
                                    unsigned jobs)
{
    std::string text;
    try {
        text = read_file(spec_file);
    } catch (const std::runtime_error& e) {
        throw SynthError(e.what());
    }
    const CohortSpec spec = parse_cohort_spec(text);
    return generate_cohort(spec, seed, out_dir, jobs);
}

}  // namespace phenosig
