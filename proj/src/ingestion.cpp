#include "phenosig/ingestion.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace phenosig {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IngestError("cannot open " + file.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::string buf(size, '\0');
    in.read(buf.data(), static_cast<std::streamsize>(size));
    return buf;
}

bool parse_field(std::string_view f, std::int64_t& out)
{
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
    return ec == std::errc{} && p == f.data() + f.size();
}

bool parse_field(std::string_view f, double& out)
{
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
    return ec == std::errc{} && p == f.data() + f.size() && std::isfinite(out);
}

/// Splits `line` on commas into exactly N fields.
template <std::size_t N>
bool split_fields(std::string_view line, std::array<std::string_view, N>& out)
{
    std::size_t n = 0;
    for (;;) {
        const auto comma = line.find(',');
        if (n == N) return false;
        out[n++] = line.substr(0, comma);
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    return n == N;
}

/// Reads a CSV with a fixed header, calling `row(fields)` for each data line.
/// `row` returns false for a malformed line.
template <std::size_t N, typename RowFn>
void read_csv(const fs::path& file, std::string_view header, std::vector<std::string>& warnings, RowFn&& row)
{
    const std::string text = read_file(file);
    std::string_view rest(text);
    bool seen_header = false;
    std::size_t total = 0;
    std::size_t malformed = 0;
    std::array<std::string_view, N> fields;
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!seen_header) {
            if (line != header)
                throw IngestError(file.string() + ": expected header '" + std::string(header) + "'");
            seen_header = true;
            continue;
        }
        if (line.empty()) continue;
        ++total;
        if (!split_fields(line, fields) || !row(fields)) ++malformed;
    }
    if (!seen_header) throw IngestError(file.string() + ": missing header");
    if (malformed * 100 > total) {
        throw IngestError(file.string() + ": " + std::to_string(malformed) + " of " + std::to_string(total) +
                          " lines malformed (more than 1%)");
    }
    if (malformed > 0)
        warnings.push_back(file.string() + ": skipped " + std::to_string(malformed) + " malformed lines");
}

/// Sorts by time; drops exact duplicate rows; throws on conflicting rows.
template <typename T, typename TimeFn>
void sort_and_check(std::vector<T>& rows, TimeFn time_of, const fs::path& file)
{
    auto by_time = [&](const T& a, const T& b) { return time_of(a) < time_of(b); };
    if (!std::is_sorted(rows.begin(), rows.end(), by_time)) std::stable_sort(rows.begin(), rows.end(), by_time);
    std::size_t out = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (out > 0 && time_of(rows[out - 1]) == time_of(rows[i])) {
            if (rows[out - 1] == rows[i]) continue;
            throw IngestError(file.string() + ": conflicting rows at timestamp " + std::to_string(time_of(rows[i])));
        }
        rows[out++] = rows[i];
    }
    rows.resize(out);
}

template <typename Fn>
void write_buffered(const fs::path& file, std::string_view header, std::size_t rows, Fn&& fill_row)
{
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestError("cannot write " + file.string());
    std::string buf;
    buf.reserve(1 << 20);
    buf.append(header);
    buf.push_back('\n');
    for (std::size_t i = 0; i < rows; ++i) {
        fill_row(i, buf);
        buf.push_back('\n');
        if (buf.size() > (1u << 20) - 256) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IngestError("write failed: " + file.string());
}

void append_int(std::string& buf, std::int64_t v)
{
    char tmp[32];
    auto [p, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
    buf.append(tmp, p);
}

void append_double(std::string& buf, double v)
{
    char tmp[64];
    auto [p, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
    buf.append(tmp, p);
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t Manifest::expected_motion_count() const
{
    return static_cast<std::size_t>(std::llround(motion_rate_hz * 600.0));
}

Manifest parse_manifest(const fs::path& file)
{
    if (!fs::exists(file)) throw IngestError("missing manifest: " + file.string());
    try {
        const auto j = nlohmann::json::parse(read_file(file));
        Manifest m;
        m.subject_id = j.at("subject_id").get<std::string>();
        if (m.subject_id.empty() || m.subject_id.find_first_of(",\n\r/") != std::string::npos)
            throw IngestError(file.string() + ": subject_id must be non-empty without ',', '/' or newlines");
        m.group = parse_group(j.at("group").get<std::string>());
        m.timezone = parse_utc_offset(j.value("timezone", std::string("UTC")));
        if (j.contains("recording")) {
            const auto& rec = j.at("recording");
            m.recording_first_day = parse_iso_date(rec.at("first_day").get<std::string>());
            m.recording_last_day = parse_iso_date(rec.at("last_day").get<std::string>());
            if (*m.recording_last_day < *m.recording_first_day)
                throw IngestError(file.string() + ": recording range ends before it starts");
        }
        m.motion_rate_hz = j.value("motion_rate_hz", 20.0);
        if (!(m.motion_rate_hz > 0.0) || m.motion_rate_hz > 1000.0)
            throw IngestError(file.string() + ": motion_rate_hz out of range");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(file.string() + ": " + e.what());
    } catch (const DomainError& e) {
        throw IngestError(file.string() + ": " + e.what());
    }
}

std::string manifest_to_json(const Manifest& m)
{
    nlohmann::json j = {
        {"subject_id", m.subject_id},
        {"group", to_string(m.group)},
        {"timezone", format_utc_offset(m.timezone)},
        {"motion_rate_hz", m.motion_rate_hz},
    };
    if (m.recording_first_day && m.recording_last_day) {
        j["recording"] = {{"first_day", format_iso_date(*m.recording_first_day)},
                          {"last_day", format_iso_date(*m.recording_last_day)}};
    }
    return j.dump(2);
}

std::vector<RawSample> read_motion_csv(const fs::path& file, std::vector<std::string>& warnings)
{
    std::vector<RawSample> rows;
    read_csv<4>(file, "t_ms,x,y,z", warnings, [&](const auto& f) {
        RawSample s;
        if (!parse_field(f[0], s.t_ms) || !parse_field(f[1], s.x) || !parse_field(f[2], s.y) ||
            !parse_field(f[3], s.z))
            return false;
        rows.push_back(s);
        return true;
    });
    sort_and_check(rows, [](const RawSample& s) { return s.t_ms; }, file);
    return rows;
}

std::vector<RawRRSample> read_rr_csv(const fs::path& file, std::vector<std::string>& warnings)
{
    std::vector<RawRRSample> rows;
    read_csv<2>(file, "t_ms,rr_ms", warnings, [&](const auto& f) {
        RawRRSample s;
        if (!parse_field(f[0], s.t_ms) || !parse_field(f[1], s.rr_ms)) return false;
        rows.push_back(s);
        return true;
    });
    sort_and_check(rows, [](const RawRRSample& s) { return s.t_ms; }, file);
    return rows;
}

SleepSchedule read_sleep_csv(const fs::path& file, std::vector<std::string>& warnings)
{
    std::vector<TimeRange> rows;
    read_csv<2>(file, "start_ms,end_ms", warnings, [&](const auto& f) {
        TimeRange r;
        if (!parse_field(f[0], r.start_ms) || !parse_field(f[1], r.end_ms) || r.end_ms <= r.start_ms) return false;
        rows.push_back(r);
        return true;
    });
    try {
        return SleepSchedule(std::move(rows));
    } catch (const DomainError& e) {
        throw IngestError(file.string() + ": " + e.what());
    }
}

std::vector<StepRecord> read_steps_csv(const fs::path& file, std::vector<std::string>& warnings)
{
    std::vector<StepRecord> rows;
    read_csv<2>(file, "bucket_start_ms,steps", warnings, [&](const auto& f) {
        StepRecord r;
        if (!parse_field(f[0], r.bucket_start_ms) || !parse_field(f[1], r.steps) || r.steps < 0) return false;
        if (r.bucket_start_ms % kStepBucketMs != 0) return false;
        rows.push_back(r);
        return true;
    });
    sort_and_check(rows, [](const StepRecord& s) { return s.bucket_start_ms; }, file);
    return rows;
}

void write_motion_csv(const fs::path& file, std::span<const RawSample> samples)
{
    write_buffered(file, "t_ms,x,y,z", samples.size(), [&](std::size_t i, std::string& buf) {
        const RawSample& s = samples[i];
        append_int(buf, s.t_ms);
        buf.push_back(',');
        append_double(buf, s.x);
        buf.push_back(',');
        append_double(buf, s.y);
        buf.push_back(',');
        append_double(buf, s.z);
    });
}

void write_rr_csv(const fs::path& file, std::span<const RawRRSample> samples)
{
    write_buffered(file, "t_ms,rr_ms", samples.size(), [&](std::size_t i, std::string& buf) {
        append_int(buf, samples[i].t_ms);
        buf.push_back(',');
        append_double(buf, samples[i].rr_ms);
    });
}

void write_sleep_csv(const fs::path& file, const SleepSchedule& sleep)
{
    const auto& iv = sleep.intervals();
    write_buffered(file, "start_ms,end_ms", iv.size(), [&](std::size_t i, std::string& buf) {
        append_int(buf, iv[i].start_ms);
        buf.push_back(',');
        append_int(buf, iv[i].end_ms);
    });
}

void write_steps_csv(const fs::path& file, std::span<const StepRecord> steps)
{
    write_buffered(file, "bucket_start_ms,steps", steps.size(), [&](std::size_t i, std::string& buf) {
        append_int(buf, steps[i].bucket_start_ms);
        buf.push_back(',');
        append_int(buf, steps[i].steps);
    });
}

SubjectData parse_subject_dir(const fs::path& dir)
{
    SubjectData data;
    data.manifest = parse_manifest(dir / "manifest.json");

    auto optional_file = [&](const char* name) -> std::optional<fs::path> {
        fs::path p = dir / name;
        if (fs::exists(p)) return p;
        data.warnings.push_back(std::string(name) + " missing in " + dir.string() + "; stream left empty");
        return std::nullopt;
    };

    if (auto p = optional_file("acc.csv")) data.acc = read_motion_csv(*p, data.warnings);
    if (auto p = optional_file("gyr.csv")) data.gyr = read_motion_csv(*p, data.warnings);
    if (auto p = optional_file("rr.csv")) data.rr = read_rr_csv(*p, data.warnings);
    if (auto p = optional_file("sleep.csv")) data.sleep = read_sleep_csv(*p, data.warnings);
    if (auto p = optional_file("steps.csv")) data.steps = read_steps_csv(*p, data.warnings);

    const Manifest& m = data.manifest;
    if (m.recording_first_day && m.recording_last_day) {
        const TimeRange rec = local_date_range(*m.recording_first_day, *m.recording_last_day, m.timezone);
        auto outside = [&](TimeMs t) { return !rec.contains(t); };
        std::erase_if(data.acc, [&](const RawSample& s) { return outside(s.t_ms); });
        std::erase_if(data.gyr, [&](const RawSample& s) { return outside(s.t_ms); });
        std::erase_if(data.rr, [&](const RawRRSample& s) { return outside(s.t_ms); });
        std::erase_if(data.steps, [&](const StepRecord& s) { return outside(s.bucket_start_ms); });
    }
    return data;
}

// ---------------------------------------------------------------------------
// RR cleaning

std::vector<RawRRSample> drop_consecutive_duplicates(std::span<const RawRRSample> raw)
{
    std::vector<RawRRSample> out;
    out.reserve(raw.size() / 2);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (i > 0 && raw[i].rr_ms == raw[i - 1].rr_ms) continue;
        out.push_back(raw[i]);
    }
    return out;
}

std::vector<RawRRSample> drop_out_of_range(std::span<const RawRRSample> samples, const RRCleaningParams& params)
{
    std::vector<RawRRSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.rr_ms >= params.min_rr_ms && s.rr_ms <= params.max_rr_ms) out.push_back(s);
    }
    return out;
}

namespace {

template <typename Sample, typename TimeFn>
std::vector<Beat> interpolate_impl(std::span<const Sample> in, TimeFn time_of, const RRCleaningParams& p)
{
    std::vector<Beat> out;
    if (in.size() < 2) return out;
    out.reserve(in.size() + in.size() / 8);

    double t = time_of(in[0]);
    out.push_back({t, in[0].rr_ms});
    for (std::size_t i = 1; i < in.size(); ++i) {
        const double tb = time_of(in[i]);
        const double rb = in[i].rr_ms;
        const double ra = in[i - 1].rr_ms;
        const double gap = tb - t - rb;
        if (gap > p.max_fill_ms) {
            // too long to be missed beats: restart the time base here
            t = tb;
            out.push_back({t, rb});
            continue;
        }
        if (gap > 0.0) {
            long n = std::lround(gap / (0.5 * (ra + rb)));
            n = std::max(n, static_cast<long>(std::ceil(gap / p.max_rr_ms)));
            n = std::min(n, static_cast<long>(std::floor(gap / p.min_rr_ms)));
            if (n >= 1) {
                std::vector<double> fill(static_cast<std::size_t>(n));
                double total = 0.0;
                for (long k = 1; k <= n; ++k) {
                    fill[k - 1] = ra + (rb - ra) * static_cast<double>(k) / static_cast<double>(n + 1);
                    total += fill[k - 1];
                }
                bool in_range = true;
                for (double& v : fill) {
                    v *= gap / total;
                    in_range = in_range && v >= p.min_rr_ms && v <= p.max_rr_ms;
                }
                if (!in_range) std::fill(fill.begin(), fill.end(), gap / static_cast<double>(n));
                for (double v : fill) {
                    t += v;
                    out.push_back({t, v});
                }
            }
        }
        t += rb;
        out.push_back({t, rb});
    }
    return out;
}

}  // namespace

std::vector<Beat> interpolate_gaps(std::span<const RawRRSample> samples, const RRCleaningParams& params)
{
    return interpolate_impl(samples, [](const RawRRSample& s) { return static_cast<double>(s.t_ms); }, params);
}

std::vector<Beat> interpolate_gaps(std::span<const Beat> beats, const RRCleaningParams& params)
{
    return interpolate_impl(beats, [](const Beat& b) { return b.t_ms; }, params);
}

std::vector<Beat> clean_rr(std::span<const RawRRSample> raw, const RRCleaningParams& params)
{
    const auto deduped = drop_consecutive_duplicates(raw);
    const auto valid = drop_out_of_range(deduped, params);
    return interpolate_gaps(std::span<const RawRRSample>(valid), params);
}

// ---------------------------------------------------------------------------
// Segmentation

State tag_state(const TimeRange& window, const SleepSchedule& sleep)
{
    return 2 * sleep.asleep_overlap(window) >= window.duration() ? State::asleep : State::awake;
}

namespace {

bool excluded(const TimeRange& w, std::span<const TimeRange> exclusions)
{
    return std::any_of(exclusions.begin(), exclusions.end(), [&](const TimeRange& e) { return e.intersects(w); });
}

TimeMs floor_index(double offset, TimeMs width)
{
    return static_cast<TimeMs>(std::floor(offset / static_cast<double>(width)));
}

std::vector<TaggedMotionWindow> cut_motion(std::span<const RawSample> samples, Sensor sensor, TimeMs origin,
                                           std::size_t expected, const SleepSchedule& sleep,
                                           std::span<const TimeRange> exclusions)
{
    std::vector<TaggedMotionWindow> out;
    auto it = std::lower_bound(samples.begin(), samples.end(), origin,
                               [](const RawSample& s, TimeMs t) { return s.t_ms < t; });
    while (it != samples.end()) {
        const TimeMs idx = (it->t_ms - origin) / kMotionWindowMs;
        const TimeMs start = origin + idx * kMotionWindowMs;
        auto end = std::lower_bound(it, samples.end(), start + kMotionWindowMs,
                                    [](const RawSample& s, TimeMs t) { return s.t_ms < t; });
        const TimeRange range{start, start + kMotionWindowMs};
        if (!excluded(range, exclusions)) {
            MotionWindow w;
            w.sensor = sensor;
            w.samples = std::span<const RawSample>(&*it, static_cast<std::size_t>(end - it));
            w.window_start_ms = start;
            w.expected_count = expected;
            out.push_back({w, tag_state(range, sleep)});
        }
        it = end;
    }
    return out;
}

}  // namespace

Segmentation segment_windows(const SegmentationInput& input, const SleepSchedule& sleep,
                             std::span<const TimeRange> exclusions)
{
    Segmentation seg;
    TimeMs first = std::numeric_limits<TimeMs>::max();
    if (!input.acc.empty()) first = std::min(first, input.acc.front().t_ms);
    if (!input.gyr.empty()) first = std::min(first, input.gyr.front().t_ms);
    if (!input.beats.empty()) first = std::min(first, static_cast<TimeMs>(std::floor(input.beats.front().t_ms)));
    if (first == std::numeric_limits<TimeMs>::max()) {
        for (const auto& s : input.steps)
            if (!excluded({s.bucket_start_ms, s.bucket_start_ms + kStepBucketMs}, exclusions)) seg.steps.push_back(s);
        return seg;
    }
    const TimeMs origin = next_local_hour(first, input.timezone);
    seg.grid_origin_ms = origin;

    seg.acc = cut_motion(input.acc, Sensor::acc, origin, input.expected_motion_count, sleep, exclusions);
    seg.gyr = cut_motion(input.gyr, Sensor::gyr, origin, input.expected_motion_count, sleep, exclusions);

    const double origin_d = static_cast<double>(origin);
    auto bt = std::lower_bound(input.beats.begin(), input.beats.end(), origin_d,
                               [](const Beat& b, double t) { return b.t_ms < t; });
    while (bt != input.beats.end()) {
        const TimeMs idx = floor_index(bt->t_ms - origin_d, kHrvWindowMs);
        const TimeMs start = origin + idx * kHrvWindowMs;
        const double end_d = static_cast<double>(start + kHrvWindowMs);
        auto end = std::lower_bound(bt, input.beats.end(), end_d, [](const Beat& b, double t) { return b.t_ms < t; });
        const TimeRange range{start, start + kHrvWindowMs};
        if (!excluded(range, exclusions)) {
            seg.rr.push_back({range, tag_state(range, sleep),
                              std::span<const Beat>(&*bt, static_cast<std::size_t>(end - bt))});
        }
        bt = end;
    }

    for (const auto& s : input.steps)
        if (!excluded({s.bucket_start_ms, s.bucket_start_ms + kStepBucketMs}, exclusions)) seg.steps.push_back(s);
    return seg;
}

}  // namespace phenosig
