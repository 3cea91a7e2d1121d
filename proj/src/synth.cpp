#include "phenosig/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <mutex>
#include <thread>
#include <atomic>

#include <json.hpp>

#include "phenosig/ingestion.hpp"

namespace phenosig {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void level_from_json(const json& j, LevelModel& m)
{
    m.mean = j.value("mean", m.mean);
    m.subject_cv = j.value("subject_cv", m.subject_cv);
    m.window_cv = j.value("window_cv", m.window_cv);
}

json level_to_json(const LevelModel& m)
{
    return {{"mean", m.mean}, {"subject_cv", m.subject_cv}, {"window_cv", m.window_cv}};
}

void group_from_json(const json& j, GroupModel& g)
{
    g.count = j.value("count", g.count);
    if (j.contains("sleep")) {
        const json& s = j.at("sleep");
        g.sleep.onset_hour = s.value("onset_hour", g.sleep.onset_hour);
        g.sleep.onset_jitter_h = s.value("onset_jitter_h", g.sleep.onset_jitter_h);
        g.sleep.duration_h = s.value("duration_h", g.sleep.duration_h);
        g.sleep.duration_sd_h = s.value("duration_sd_h", g.sleep.duration_sd_h);
    }
    if (j.contains("rr")) {
        const json& r = j.at("rr");
        g.rr.mean_awake_ms = r.value("mean_awake_ms", g.rr.mean_awake_ms);
        g.rr.mean_asleep_ms = r.value("mean_asleep_ms", g.rr.mean_asleep_ms);
        g.rr.subject_sd_ms = r.value("subject_sd_ms", g.rr.subject_sd_ms);
        g.rr.lf_amp_ms = r.value("lf_amp_ms", g.rr.lf_amp_ms);
        g.rr.hf_amp_ms = r.value("hf_amp_ms", g.rr.hf_amp_ms);
        g.rr.ar_coef = r.value("ar_coef", g.rr.ar_coef);
        if (r.contains("noise_awake")) level_from_json(r.at("noise_awake"), g.rr.noise_awake);
        if (r.contains("noise_asleep")) level_from_json(r.at("noise_asleep"), g.rr.noise_asleep);
    }
    if (j.contains("motion")) {
        const json& m = j.at("motion");
        if (m.contains("acc_awake")) level_from_json(m.at("acc_awake"), g.motion.acc_awake);
        if (m.contains("acc_asleep")) level_from_json(m.at("acc_asleep"), g.motion.acc_asleep);
        if (m.contains("gyr_awake")) level_from_json(m.at("gyr_awake"), g.motion.gyr_awake);
        if (m.contains("gyr_asleep")) level_from_json(m.at("gyr_asleep"), g.motion.gyr_asleep);
        g.motion.sample_noise = m.value("sample_noise", g.motion.sample_noise);
    }
    g.steps_awake_per_bucket = j.value("steps_awake_per_bucket", g.steps_awake_per_bucket);
    if (j.contains("artifacts")) {
        const json& a = j.at("artifacts");
        g.artifacts.out_of_range_rate = a.value("out_of_range_rate", g.artifacts.out_of_range_rate);
        g.artifacts.dropout_rate = a.value("dropout_rate", g.artifacts.dropout_rate);
    }
}

json group_to_json(const GroupModel& g)
{
    return {
        {"count", g.count},
        {"sleep",
         {{"onset_hour", g.sleep.onset_hour},
          {"onset_jitter_h", g.sleep.onset_jitter_h},
          {"duration_h", g.sleep.duration_h},
          {"duration_sd_h", g.sleep.duration_sd_h}}},
        {"rr",
         {{"mean_awake_ms", g.rr.mean_awake_ms},
          {"mean_asleep_ms", g.rr.mean_asleep_ms},
          {"subject_sd_ms", g.rr.subject_sd_ms},
          {"lf_amp_ms", g.rr.lf_amp_ms},
          {"hf_amp_ms", g.rr.hf_amp_ms},
          {"ar_coef", g.rr.ar_coef},
          {"noise_awake", level_to_json(g.rr.noise_awake)},
          {"noise_asleep", level_to_json(g.rr.noise_asleep)}}},
        {"motion",
         {{"acc_awake", level_to_json(g.motion.acc_awake)},
          {"acc_asleep", level_to_json(g.motion.acc_asleep)},
          {"gyr_awake", level_to_json(g.motion.gyr_awake)},
          {"gyr_asleep", level_to_json(g.motion.gyr_asleep)},
          {"sample_noise", g.motion.sample_noise}}},
        {"steps_awake_per_bucket", g.steps_awake_per_bucket},
        {"artifacts",
         {{"out_of_range_rate", g.artifacts.out_of_range_rate}, {"dropout_rate", g.artifacts.dropout_rate}}},
    };
}

void check(bool ok, const std::string& what)
{
    if (!ok) throw SynthError("invalid cohort spec: " + what);
}

void validate_level(const LevelModel& m, const std::string& name)
{
    check(std::isfinite(m.mean) && m.mean >= 0.0, name + ".mean must be >= 0");
    check(std::isfinite(m.subject_cv) && m.subject_cv >= 0.0, name + ".subject_cv must be >= 0");
    check(std::isfinite(m.window_cv) && m.window_cv >= 0.0, name + ".window_cv must be >= 0");
}

void validate_group(const GroupModel& g, const std::string& name)
{
    check(g.sleep.duration_h > 0.0 && g.sleep.duration_h < 20.0, name + ".sleep.duration_h must be in (0, 20)");
    check(g.sleep.onset_jitter_h >= 0.0 && g.sleep.duration_sd_h >= 0.0, name + ".sleep spreads must be >= 0");
    check(g.sleep.onset_hour >= 0.0 && g.sleep.onset_hour < 48.0, name + ".sleep.onset_hour must be in [0, 48)");
    for (double m : {g.rr.mean_awake_ms, g.rr.mean_asleep_ms})
        check(m >= kMinRRMs && m <= kMaxRRMs, name + ".rr means must lie in [300, 2000] ms");
    check(g.rr.subject_sd_ms >= 0.0 && g.rr.lf_amp_ms >= 0.0 && g.rr.hf_amp_ms >= 0.0,
          name + ".rr amplitudes must be >= 0");
    check(g.rr.ar_coef > -1.0 && g.rr.ar_coef < 1.0, name + ".rr.ar_coef must be in (-1, 1)");
    validate_level(g.rr.noise_awake, name + ".rr.noise_awake");
    validate_level(g.rr.noise_asleep, name + ".rr.noise_asleep");
    validate_level(g.motion.acc_awake, name + ".motion.acc_awake");
    validate_level(g.motion.acc_asleep, name + ".motion.acc_asleep");
    validate_level(g.motion.gyr_awake, name + ".motion.gyr_awake");
    validate_level(g.motion.gyr_asleep, name + ".motion.gyr_asleep");
    check(g.motion.sample_noise >= 0.0, name + ".motion.sample_noise must be >= 0");
    check(g.steps_awake_per_bucket >= 0.0, name + ".steps_awake_per_bucket must be >= 0");
    for (double r : {g.artifacts.out_of_range_rate, g.artifacts.dropout_rate})
        check(r >= 0.0 && r <= 1.0, name + ".artifacts rates must be in [0, 1]");
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Mean-one log-normal multiplier with coefficient of variation `cv`.
double lognormal_factor(double cv, std::mt19937_64& rng)
{
    if (cv <= 0.0) return 1.0;
    const double s2 = std::log1p(cv * cv);
    std::normal_distribution<double> n(0.0, 1.0);
    return std::exp(std::sqrt(s2) * n(rng) - 0.5 * s2);
}

double quantize(double v)
{
    return std::round(v * 1e4) / 1e4;
}

struct Block {
    TimeMs start = 0;
    State state = State::awake;
    bool dropped = false;
};

}  // namespace

CohortSpec parse_cohort_spec(const std::string& json_text)
{
    CohortSpec spec;
    try {
        const json j = json::parse(json_text);
        spec.version = j.value("version", spec.version);
        spec.start_date = j.value("start_date", spec.start_date);
        spec.days = j.value("days", spec.days);
        spec.timezone = j.value("timezone", spec.timezone);
        if (j.contains("recorded_hours")) spec.recorded_hours = j.at("recorded_hours").get<std::vector<int>>();
        spec.motion_rate_hz = j.value("motion_rate_hz", spec.motion_rate_hz);
        spec.rr_rate_hz = j.value("rr_rate_hz", spec.rr_rate_hz);
        if (j.contains("groups")) {
            const json& g = j.at("groups");
            if (g.contains("control")) group_from_json(g.at("control"), spec.control);
            if (g.contains("patient")) group_from_json(g.at("patient"), spec.patient);
        }
    } catch (const json::exception& e) {
        throw SynthError(std::string("cannot parse cohort spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

std::string cohort_spec_to_json(const CohortSpec& spec)
{
    const json j = {
        {"version", spec.version},
        {"start_date", spec.start_date},
        {"days", spec.days},
        {"timezone", spec.timezone},
        {"recorded_hours", spec.recorded_hours},
        {"motion_rate_hz", spec.motion_rate_hz},
        {"rr_rate_hz", spec.rr_rate_hz},
        {"groups", {{"control", group_to_json(spec.control)}, {"patient", group_to_json(spec.patient)}}},
    };
    return j.dump(2) + "\n";
}

void validate(const CohortSpec& spec)
{
    check(spec.version == 1, "unsupported version " + std::to_string(spec.version));
    check(spec.days >= 1 && spec.days <= 3660, "days must be in [1, 3660]");
    try {
        parse_iso_date(spec.start_date);
        parse_utc_offset(spec.timezone);
    } catch (const DomainError& e) {
        throw SynthError(std::string("invalid cohort spec: ") + e.what());
    }
    for (int h : spec.recorded_hours) check(h >= 0 && h <= 23, "recorded_hours must be in [0, 23]");
    check(spec.motion_rate_hz > 0.0 && spec.motion_rate_hz <= 200.0, "motion_rate_hz must be in (0, 200]");
    check(spec.rr_rate_hz > 0.0 && spec.rr_rate_hz <= 100.0, "rr_rate_hz must be in (0, 100]");
    check(spec.control.count + spec.patient.count >= 1, "cohort has no subjects");
    check(spec.control.count <= 999 && spec.patient.count <= 999, "at most 999 subjects per group");
    validate_group(spec.control, "control");
    validate_group(spec.patient, "patient");
}

std::vector<std::pair<std::string, Group>> subject_roster(const CohortSpec& spec)
{
    std::vector<std::pair<std::string, Group>> out;
    char buf[16];
    for (std::size_t i = 1; i <= spec.control.count; ++i) {
        std::snprintf(buf, sizeof buf, "C%03zu", i);
        out.emplace_back(buf, Group::control);
    }
    for (std::size_t i = 1; i <= spec.patient.count; ++i) {
        std::snprintf(buf, sizeof buf, "P%03zu", i);
        out.emplace_back(buf, Group::patient);
    }
    return out;
}

SyntheticSubject generate_subject(const CohortSpec& spec, std::uint64_t seed, const std::string& subject_id,
                                  Group group)
{
    const GroupModel& gm = group == Group::control ? spec.control : spec.patient;
    const UtcOffset tz = parse_utc_offset(spec.timezone);
    const std::int64_t first_day = parse_iso_date(spec.start_date);
    const auto days = static_cast<std::int64_t>(spec.days);

    const std::uint64_t h = fnv1a(subject_id);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    SyntheticSubject subj;
    subj.subject_id = subject_id;
    subj.group = group;
    subj.truth.subject_id = subject_id;
    subj.truth.group = group;

    // Subject-level draws.
    auto subject_level = [&](const LevelModel& m) { return m.mean * lognormal_factor(m.subject_cv, rng); };
    const double acc_awake = subject_level(gm.motion.acc_awake);
    const double acc_asleep = subject_level(gm.motion.acc_asleep);
    const double gyr_awake = subject_level(gm.motion.gyr_awake);
    const double gyr_asleep = subject_level(gm.motion.gyr_asleep);
    const double noise_awake = subject_level(gm.rr.noise_awake);
    const double noise_asleep = subject_level(gm.rr.noise_asleep);
    const double rr_offset = gm.rr.subject_sd_ms * normal(rng);
    const double phase_lf = 2.0 * std::numbers::pi * unif(rng);
    const double phase_hf = 2.0 * std::numbers::pi * unif(rng);

    // Sleep: one episode per night, starting the evening before the first day.
    std::vector<TimeRange> episodes;
    for (std::int64_t d = first_day - 1; d < first_day + days; ++d) {
        const double onset_h = gm.sleep.onset_hour + gm.sleep.onset_jitter_h * normal(rng);
        const double dur_h = std::clamp(gm.sleep.duration_h + gm.sleep.duration_sd_h * normal(rng), 0.5, 20.0);
        TimeMs start = local_midnight(d, tz) + static_cast<TimeMs>(std::llround(onset_h * kMsPerHour));
        if (!episodes.empty()) start = std::max(start, episodes.back().end_ms + kMsPerMinute);
        const TimeMs end = start + static_cast<TimeMs>(std::llround(dur_h * kMsPerHour));
        episodes.push_back({start, end});
    }
    subj.sleep = SleepSchedule(episodes);

    // Recorded 10-minute blocks in time order.
    std::vector<int> hours = spec.recorded_hours;
    if (hours.empty())
        for (int hr = 0; hr < 24; ++hr) hours.push_back(hr);
    std::sort(hours.begin(), hours.end());
    hours.erase(std::unique(hours.begin(), hours.end()), hours.end());

    std::vector<Block> blocks;
    for (std::int64_t d = first_day; d < first_day + days; ++d) {
        for (int hr : hours) {
            for (int k = 0; k < 6; ++k) {
                Block b;
                b.start = local_midnight(d, tz) + hr * kMsPerHour + k * kMotionWindowMs;
                b.state = tag_state({b.start, b.start + kMotionWindowMs}, subj.sleep);
                blocks.push_back(b);
            }
        }
    }
    for (Block& b : blocks) b.dropped = unif(rng) < gm.artifacts.dropout_rate;
    subj.truth.blocks = blocks.size();

    // Motion and steps.
    const std::size_t per_window = static_cast<std::size_t>(std::llround(spec.motion_rate_hz * 600.0));
    const double period_ms = 1000.0 / spec.motion_rate_hz;
    const double jitter = gm.motion.sample_noise;
    const double jitter_norm = 1.0 / std::sqrt(1.0 + jitter * jitter);
    subj.acc.reserve(blocks.size() * per_window);
    subj.gyr.reserve(blocks.size() * per_window);
    auto emit_motion = [&](std::vector<RawSample>& out, TimeMs start, double energy) {
        const double amp = std::sqrt(energy);
        for (std::size_t i = 0; i < per_window; ++i) {
            double dx = normal(rng), dy = normal(rng), dz = normal(rng);
            double len = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (len == 0.0) {
                dx = 1.0;
                len = 1.0;
            }
            const double norm = amp * (1.0 + jitter * normal(rng)) * jitter_norm / len;
            out.push_back({start + static_cast<TimeMs>(std::llround(static_cast<double>(i) * period_ms)),
                           quantize(dx * norm), quantize(dy * norm), quantize(dz * norm)});
        }
    };
    std::poisson_distribution<std::int64_t> steps_dist(gm.steps_awake_per_bucket);
    for (const Block& b : blocks) {
        if (b.dropped) {
            ++subj.truth.dropped_blocks;
            continue;
        }
        const bool asleep = b.state == State::asleep;
        const LevelModel& am = asleep ? gm.motion.acc_asleep : gm.motion.acc_awake;
        const LevelModel& gy = asleep ? gm.motion.gyr_asleep : gm.motion.gyr_awake;
        const double e_acc = (asleep ? acc_asleep : acc_awake) * lognormal_factor(am.window_cv, rng);
        const double e_gyr = (asleep ? gyr_asleep : gyr_awake) * lognormal_factor(gy.window_cv, rng);
        emit_motion(subj.acc, b.start, e_acc);
        emit_motion(subj.gyr, b.start, e_gyr);
        subj.windows.push_back({Sensor::acc, b.start, b.state, e_acc});
        subj.windows.push_back({Sensor::gyr, b.start, b.state, e_gyr});
        (asleep ? subj.truth.mov_asleep : subj.truth.mov_awake) += 1;
        const std::int64_t steps = asleep || gm.steps_awake_per_bucket <= 0.0 ? 0 : steps_dist(rng);
        subj.steps.push_back({b.start, steps});
    }

    // Heartbeats: one continuous process per run of contiguous recorded
    // blocks, reported on a fixed tick grid holding the latest beat's value.
    const double tick_ms = 1000.0 / spec.rr_rate_hz;
    const double two_pi = 2.0 * std::numbers::pi;
    std::size_t i = 0;
    while (i < blocks.size()) {
        std::size_t j = i + 1;
        while (j < blocks.size() && blocks[j].start == blocks[j - 1].start + kMotionWindowMs) ++j;
        const TimeMs run_start = blocks[i].start;
        const TimeMs run_end = blocks[j - 1].start + kMotionWindowMs;

        // Noise level per hour of the run.
        std::vector<double> hour_noise;
        for (TimeMs hs = run_start; hs < run_end; hs += kHrvWindowMs) {
            const State st = tag_state({hs, hs + kHrvWindowMs}, subj.sleep);
            const LevelModel& nm = st == State::asleep ? gm.rr.noise_asleep : gm.rr.noise_awake;
            hour_noise.push_back((st == State::asleep ? noise_asleep : noise_awake) *
                                 lognormal_factor(nm.window_cv, rng));
        }

        double t = static_cast<double>(run_start) - 3000.0;
        double ar = 0.0;
        bool first = true;
        std::vector<Beat> beats;
        while (t < static_cast<double>(run_end)) {
            const auto hidx = static_cast<std::size_t>(
                std::clamp<double>(std::floor((t - static_cast<double>(run_start)) / kHrvWindowMs), 0.0,
                                   static_cast<double>(hour_noise.size() - 1)));
            const double sigma = hour_noise[hidx];
            const double eps = normal(rng);
            ar = first ? sigma * eps : gm.rr.ar_coef * ar + std::sqrt(1.0 - gm.rr.ar_coef * gm.rr.ar_coef) * sigma * eps;
            first = false;
            const bool asleep = subj.sleep.asleep_overlap({static_cast<TimeMs>(t), static_cast<TimeMs>(t) + 1}) > 0;
            const double ts = t / 1000.0;
            double rr = (asleep ? gm.rr.mean_asleep_ms : gm.rr.mean_awake_ms) + rr_offset +
                        gm.rr.lf_amp_ms * std::sin(two_pi * 0.1 * ts + phase_lf) +
                        gm.rr.hf_amp_ms * std::sin(two_pi * 0.25 * ts + phase_hf) + ar;
            rr = std::round(std::clamp(rr, 330.0, 1900.0));
            t += rr;
            double reported = rr;
            if (unif(rng) < gm.artifacts.out_of_range_rate) {
                reported = unif(rng) < 0.5 ? std::round(100.0 + 180.0 * unif(rng))
                                           : std::round(2100.0 + 900.0 * unif(rng));
                beats.push_back({t, -reported});  // sign marks an injected artifact
            } else {
                beats.push_back({t, reported});
            }
        }

        // Report on ticks within kept blocks.
        std::size_t bi = 0, next = 0;
        std::size_t cur = beats.size();  // latest beat at or before the tick
        const auto n_ticks = static_cast<std::size_t>(std::llround(static_cast<double>(kMotionWindowMs) / tick_ms));
        for (std::size_t k = i; k < j; ++k) {
            const Block& b = blocks[k];
            const double bstart = static_cast<double>(b.start);
            const double bend = bstart + static_cast<double>(kMotionWindowMs);
            while (bi < beats.size() && beats[bi].t_ms < bstart) ++bi;
            if (b.dropped) continue;
            for (std::size_t q = bi; q < beats.size() && beats[q].t_ms < bend; ++q) {
                ++subj.truth.beats;
                if (beats[q].rr_ms < 0) ++subj.truth.out_of_range;
            }
            for (std::size_t q = 0; q < n_ticks; ++q) {
                const double tick = bstart + static_cast<double>(q) * tick_ms;
                while (next < beats.size() && beats[next].t_ms <= tick) cur = next++;
                if (cur == beats.size()) continue;
                subj.rr.push_back({static_cast<TimeMs>(std::llround(tick)), std::fabs(beats[cur].rr_ms)});
            }
        }
        i = j;
    }

    // HRV windows: recorded hours without any dropped block.
    for (std::size_t b = 0; b + 5 < blocks.size(); b += 6) {
        bool ok = true;
        for (std::size_t k = b; k < b + 6; ++k) ok = ok && !blocks[k].dropped;
        if (!ok) continue;
        const State st = tag_state({blocks[b].start, blocks[b].start + kHrvWindowMs}, subj.sleep);
        (st == State::asleep ? subj.truth.hrv_asleep : subj.truth.hrv_awake) += 1;
    }
    return subj;
}

void write_subject(const CohortSpec& spec, const SyntheticSubject& subject, const fs::path& dir)
{
    fs::create_directories(dir);
    Manifest m;
    m.subject_id = subject.subject_id;
    m.group = subject.group;
    m.timezone = parse_utc_offset(spec.timezone);
    const std::int64_t first = parse_iso_date(spec.start_date);
    m.recording_first_day = first;
    m.recording_last_day = first + static_cast<std::int64_t>(spec.days) - 1;
    m.motion_rate_hz = spec.motion_rate_hz;
    {
        std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
        out << manifest_to_json(m);
        if (!out) throw SynthError("cannot write " + (dir / "manifest.json").string());
    }
    write_motion_csv(dir / "acc.csv", subject.acc);
    write_motion_csv(dir / "gyr.csv", subject.gyr);
    write_rr_csv(dir / "rr.csv", subject.rr);
    write_sleep_csv(dir / "sleep.csv", subject.sleep);
    write_steps_csv(dir / "steps.csv", subject.steps);

    const SubjectTruth& t = subject.truth;
    const json tj = {
        {"subject_id", t.subject_id},   {"group", to_string(t.group)},    {"mov_awake", t.mov_awake},
        {"mov_asleep", t.mov_asleep},   {"hrv_awake", t.hrv_awake},       {"hrv_asleep", t.hrv_asleep},
        {"beats", t.beats},             {"out_of_range", t.out_of_range}, {"blocks", t.blocks},
        {"dropped_blocks", t.dropped_blocks},
    };
    std::ofstream tout(dir / "truth.json", std::ios::binary | std::ios::trunc);
    tout << tj.dump(2) << "\n";

    std::ofstream wout(dir / "truth_windows.csv", std::ios::binary | std::ios::trunc);
    wout << "sensor,window_start_ms,state,energy\n";
    for (const TruthWindow& w : subject.windows)
        wout << to_string(w.sensor) << ',' << w.window_start_ms << ',' << to_string(w.state) << ','
             << format_double(w.energy) << '\n';
    if (!tout || !wout) throw SynthError("cannot write ground truth in " + dir.string());
}

std::vector<SubjectTruth> generate_cohort(const CohortSpec& spec, std::uint64_t seed, const fs::path& outdir,
                                          unsigned jobs)
{
    validate(spec);
    const auto roster = subject_roster(spec);
    fs::create_directories(outdir);
    {
        std::ofstream out(outdir / "cohort.json", std::ios::binary | std::ios::trunc);
        out << cohort_spec_to_json(spec);
    }
    std::vector<SubjectTruth> truths(roster.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < roster.size(); k = next++) {
            try {
                const auto& [id, group] = roster[k];
                SyntheticSubject s = generate_subject(spec, seed, id, group);
                write_subject(spec, s, outdir / id);
                truths[k] = s.truth;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(roster.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return truths;
}

SubjectTruth read_truth(const fs::path& subject_dir)
{
    std::ifstream in(subject_dir / "truth.json");
    if (!in) throw SynthError("missing " + (subject_dir / "truth.json").string());
    try {
        const json j = json::parse(in);
        SubjectTruth t;
        t.subject_id = j.at("subject_id").get<std::string>();
        t.group = parse_group(j.at("group").get<std::string>());
        t.mov_awake = j.at("mov_awake").get<std::size_t>();
        t.mov_asleep = j.at("mov_asleep").get<std::size_t>();
        t.hrv_awake = j.at("hrv_awake").get<std::size_t>();
        t.hrv_asleep = j.at("hrv_asleep").get<std::size_t>();
        t.beats = j.at("beats").get<std::size_t>();
        t.out_of_range = j.at("out_of_range").get<std::size_t>();
        t.blocks = j.at("blocks").get<std::size_t>();
        t.dropped_blocks = j.at("dropped_blocks").get<std::size_t>();
        return t;
    } catch (const json::exception& e) {
        throw SynthError("malformed truth.json in " + subject_dir.string() + ": " + e.what());
    }
}

}  // namespace phenosig
