#include "phenosig/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace phenosig {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view text, const std::array<E, N>& values, std::string_view what)
{
    for (E v : values) {
        if (to_string(v) == text) return v;
    }
    throw DomainError("unknown " + std::string(what) + ": '" + std::string(text) + "'");
}

TimeMs floor_div(TimeMs a, TimeMs b)
{
    TimeMs q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::string_view to_string(Sensor s)
{
    return s == Sensor::acc ? "acc" : "gyr";
}

std::string_view to_string(State s)
{
    return s == State::awake ? "awake" : "asleep";
}

std::string_view to_string(Group g)
{
    return g == Group::control ? "control" : "patient";
}

std::string_view to_string(Feature f)
{
    switch (f) {
    case Feature::acc_STE: return "acc_STE";
    case Feature::gyr_STE: return "gyr_STE";
    case Feature::sampen: return "sampen";
    case Feature::higuchi: return "higuchi";
    case Feature::mfd_fd1: return "mfd_fd1";
    case Feature::mfd_min: return "mfd_min";
    case Feature::mfd_max: return "mfd_max";
    case Feature::mfd_mean: return "mfd_mean";
    case Feature::mfd_std: return "mfd_std";
    case Feature::sd1: return "sd1";
    case Feature::sd2: return "sd2";
    case Feature::lf_power: return "lf_power";
    case Feature::hf_power: return "hf_power";
    case Feature::lf_hf_ratio: return "lf_hf_ratio";
    }
    return "?";
}

std::string_view to_string(RRInvalidReason r)
{
    return r == RRInvalidReason::empty ? "empty" : "insufficient_coverage";
}

Sensor parse_sensor(std::string_view text)
{
    return parse_enum(text, std::array{Sensor::acc, Sensor::gyr}, "sensor");
}

State parse_state(std::string_view text)
{
    return parse_enum(text, kAllStates, "state");
}

Group parse_group(std::string_view text)
{
    return parse_enum(text, std::array{Group::control, Group::patient}, "group");
}

Feature parse_feature(std::string_view text)
{
    return parse_enum(text, kAllFeatures, "feature");
}

// ---------------------------------------------------------------------------

TimeMs TimeRange::overlap(const TimeRange& o) const
{
    const TimeMs lo = std::max(start_ms, o.start_ms);
    const TimeMs hi = std::min(end_ms, o.end_ms);
    return hi > lo ? hi - lo : 0;
}

UtcOffset parse_utc_offset(std::string_view text)
{
    if (text == "UTC" || text == "Z" || text == "utc") return {0};
    auto fail = [&] { return DomainError("bad UTC offset '" + std::string(text) + "'"); };
    if (text.size() < 3 || (text[0] != '+' && text[0] != '-')) throw fail();
    const int sign = text[0] == '-' ? -1 : 1;
    std::string digits;
    for (char c : text.substr(1)) {
        if (c == ':') continue;
        if (c < '0' || c > '9') throw fail();
        digits.push_back(c);
    }
    if (digits.size() != 2 && digits.size() != 4) throw fail();
    const int hours = std::stoi(digits.substr(0, 2));
    const int minutes = digits.size() == 4 ? std::stoi(digits.substr(2, 2)) : 0;
    if (hours > 14 || minutes > 59) throw fail();
    return {sign * (hours * 60 + minutes)};
}

std::string format_utc_offset(UtcOffset offset)
{
    const int m = std::abs(offset.minutes);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%02d:%02d", offset.minutes < 0 ? '-' : '+', m / 60, m % 60);
    return buf;
}

std::int64_t parse_iso_date(std::string_view text)
{
    using namespace std::chrono;
    auto fail = [&] { return DomainError("bad date '" + std::string(text) + "' (expected YYYY-MM-DD)"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
        if (ec != std::errc{} || p != text.data() + pos + len) throw fail();
        return v;
    };
    const year_month_day ymd{year{num(0, 4)}, month{static_cast<unsigned>(num(5, 2))},
                             day{static_cast<unsigned>(num(8, 2))}};
    if (!ymd.ok()) throw fail();
    return sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(std::int64_t days_since_epoch)
{
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{days_since_epoch}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::int64_t local_day(TimeMs t, UtcOffset tz)
{
    return floor_div(t + tz.ms(), kMsPerDay);
}

TimeMs local_midnight(std::int64_t day, UtcOffset tz)
{
    return day * kMsPerDay - tz.ms();
}

TimeMs next_local_hour(TimeMs t, UtcOffset tz)
{
    const TimeMs local = t + tz.ms();
    const TimeMs hour = floor_div(local, kMsPerHour);
    const TimeMs boundary = hour * kMsPerHour == local ? local : (hour + 1) * kMsPerHour;
    return boundary - tz.ms();
}

TimeRange local_date_range(std::int64_t first_day, std::int64_t last_day, UtcOffset tz)
{
    if (last_day < first_day) throw DomainError("date range ends before it starts");
    return {local_midnight(first_day, tz), local_midnight(last_day + 1, tz)};
}

// ---------------------------------------------------------------------------

SleepSchedule::SleepSchedule(std::vector<TimeRange> intervals) : intervals_(std::move(intervals))
{
    std::sort(intervals_.begin(), intervals_.end(),
              [](const TimeRange& a, const TimeRange& b) { return a.start_ms < b.start_ms; });
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        if (intervals_[i].end_ms <= intervals_[i].start_ms)
            throw DomainError("sleep interval with end <= start");
        if (i > 0 && intervals_[i].start_ms < intervals_[i - 1].end_ms)
            throw DomainError("overlapping sleep intervals");
    }
}

TimeMs SleepSchedule::asleep_overlap(const TimeRange& range) const
{
    // first interval whose end is after range start
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), range.start_ms,
                               [](TimeMs t, const TimeRange& iv) { return t < iv.end_ms; });
    TimeMs total = 0;
    for (; it != intervals_.end() && it->start_ms < range.end_ms; ++it) total += it->overlap(range);
    return total;
}

bool MotionWindow::is_valid(double min_fraction) const
{
    if (samples.empty()) return false;
    if (min_fraction == 0.9) return 10 * samples.size() >= 9 * expected_count;
    return static_cast<double>(samples.size()) >= min_fraction * static_cast<double>(expected_count);
}

// ---------------------------------------------------------------------------

namespace {

bool coverage_ok(double coverage_ms, TimeMs window_ms, double min_coverage)
{
    // 0.9 is not exact in binary; compare 10*cov >= 9*len for the default
    if (min_coverage == 0.9) return 10.0 * coverage_ms >= 9.0 * static_cast<double>(window_ms);
    return coverage_ms >= min_coverage * static_cast<double>(window_ms);
}

bool in_range(double rr)
{
    return rr >= kMinRRMs && rr <= kMaxRRMs;
}

}  // namespace

RRValidation validate_rr_window(std::span<const Beat> beats, const TimeRange& window, double min_coverage)
{
    auto lo = std::lower_bound(beats.begin(), beats.end(), static_cast<double>(window.start_ms),
                               [](const Beat& b, double t) { return b.t_ms < t; });
    RRSeries series;
    series.window_start_ms = window.start_ms;
    series.window_end_ms = window.end_ms;
    double coverage_ms = 0.0;
    for (auto it = lo; it != beats.end() && it->t_ms < static_cast<double>(window.end_ms); ++it) {
        if (!in_range(it->rr_ms)) continue;
        const double rel = (it->t_ms - static_cast<double>(window.start_ms)) / 1000.0;
        if (!series.beat_times.empty() && rel <= series.beat_times.back()) continue;
        series.beat_times.push_back(rel);
        series.intervals.push_back(it->rr_ms);
        coverage_ms += it->rr_ms;
    }
    if (series.intervals.empty()) return RRInvalid{RRInvalidReason::empty, 0.0};
    series.coverage_seconds = coverage_ms / 1000.0;
    if (!coverage_ok(coverage_ms, window.duration(), min_coverage))
        return RRInvalid{RRInvalidReason::insufficient_coverage, series.coverage_seconds};
    return series;
}

RRValidation validate_rr_window(const RRSeries& series, double min_coverage)
{
    RRSeries out;
    out.window_start_ms = series.window_start_ms;
    out.window_end_ms = series.window_end_ms;
    const double len_s = static_cast<double>(series.window_end_ms - series.window_start_ms) / 1000.0;
    double coverage_ms = 0.0;
    for (std::size_t i = 0; i < series.intervals.size() && i < series.beat_times.size(); ++i) {
        const double t = series.beat_times[i];
        if (t < 0.0 || t >= len_s || !in_range(series.intervals[i])) continue;
        if (!out.beat_times.empty() && t <= out.beat_times.back()) continue;
        out.beat_times.push_back(t);
        out.intervals.push_back(series.intervals[i]);
        coverage_ms += series.intervals[i];
    }
    if (out.intervals.empty()) return RRInvalid{RRInvalidReason::empty, 0.0};
    out.coverage_seconds = coverage_ms / 1000.0;
    if (!coverage_ok(coverage_ms, series.window_end_ms - series.window_start_ms, min_coverage))
        return RRInvalid{RRInvalidReason::insufficient_coverage, out.coverage_seconds};
    return out;
}

std::vector<Beat> to_beats(const RRSeries& series)
{
    std::vector<Beat> beats;
    beats.reserve(series.intervals.size());
    for (std::size_t i = 0; i < series.intervals.size(); ++i)
        beats.push_back({static_cast<double>(series.window_start_ms) + series.beat_times[i] * 1000.0,
                         series.intervals[i]});
    return beats;
}

// ---------------------------------------------------------------------------

std::string format_double(double v)
{
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw DomainError("cannot format double");
    return std::string(buf, p);
}

double parse_double(std::string_view text)
{
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
        throw DomainError("bad number '" + std::string(text) + "'");
    return v;
}

std::string to_csv_line(const FeatureRecord& r)
{
    std::string line = r.subject_id;
    line += ',';
    line += to_string(r.feature);
    line += ',';
    line += to_string(r.state);
    line += ',';
    line += std::to_string(r.window_start_ms);
    line += ',';
    line += format_double(r.value);
    return line;
}

FeatureRecord parse_feature_record(std::string_view line)
{
    std::array<std::string_view, 5> fields;
    std::size_t n = 0;
    for (;;) {
        const auto comma = line.find(',');
        if (n == fields.size()) throw DomainError("feature record needs 5 fields");
        fields[n++] = line.substr(0, comma);
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    if (n != fields.size()) throw DomainError("feature record needs 5 fields");
    FeatureRecord r;
    r.subject_id = std::string(fields[0]);
    r.feature = parse_feature(fields[1]);
    r.state = parse_state(fields[2]);
    auto [p, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), r.window_start_ms);
    if (ec != std::errc{} || p != fields[3].data() + fields[3].size())
        throw DomainError("bad window_start_ms '" + std::string(fields[3]) + "'");
    r.value = parse_double(fields[4]);
    if (!std::isfinite(r.value)) throw DomainError("feature value must be finite");
    return r;
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json opt_to_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from_json(const json& j)
{
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

std::string to_json(const SubjectSummary& s)
{
    json features = json::object();
    for (Feature f : kAllFeatures) {
        json per_state = json::object();
        for (State st : kAllStates) {
            const auto& stat = s.at(f, st);
            if (!stat) continue;
            per_state[std::string(to_string(st))] = {
                {"count", stat->count}, {"mean", stat->mean}, {"std", opt_to_json(stat->stddev)}};
        }
        if (!per_state.empty()) features[std::string(to_string(f))] = per_state;
    }
    const json j = {
        {"subject_id", s.subject_id},
        {"group", to_string(s.group)},
        {"features", features},
        {"daily",
         {{"qualifying_days", s.daily.qualifying_days},
          {"eligible", s.daily.eligible},
          {"sleep_wake_ratio_mean", opt_to_json(s.daily.sleep_wake_ratio_mean)},
          {"sleep_wake_ratio_std", opt_to_json(s.daily.sleep_wake_ratio_std)},
          {"steps_per_day_mean", opt_to_json(s.daily.steps_per_day_mean)},
          {"steps_per_day_std", opt_to_json(s.daily.steps_per_day_std)}}},
    };
    return j.dump(2);
}

SubjectSummary parse_subject_summary(std::string_view json_text)
{
    try {
        const json j = json::parse(json_text);
        SubjectSummary s;
        s.subject_id = j.at("subject_id").get<std::string>();
        s.group = parse_group(j.at("group").get<std::string>());
        for (const auto& [fname, per_state] : j.at("features").items()) {
            const Feature f = parse_feature(fname);
            for (const auto& [sname, stat] : per_state.items()) {
                FeatureStat fs;
                fs.count = stat.at("count").get<std::size_t>();
                fs.mean = stat.at("mean").get<double>();
                fs.stddev = opt_from_json(stat.at("std"));
                s.at(f, parse_state(sname)) = fs;
            }
        }
        const json& d = j.at("daily");
        s.daily.qualifying_days = d.at("qualifying_days").get<std::size_t>();
        s.daily.eligible = d.at("eligible").get<bool>();
        s.daily.sleep_wake_ratio_mean = opt_from_json(d.at("sleep_wake_ratio_mean"));
        s.daily.sleep_wake_ratio_std = opt_from_json(d.at("sleep_wake_ratio_std"));
        s.daily.steps_per_day_mean = opt_from_json(d.at("steps_per_day_mean"));
        s.daily.steps_per_day_std = opt_from_json(d.at("steps_per_day_std"));
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("bad subject summary: ") + e.what());
    }
}

}  // namespace phenosig
