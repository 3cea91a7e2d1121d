#include <doctest.h>

#include <numeric>
#include <random>

#include "phenosig/ingestion.hpp"
#include "test_util.hpp"

using namespace phenosig;
using testutil::TempDir;
using testutil::write_text;

namespace {

const UtcOffset kTz{120};
const TimeMs kT0 = local_midnight(parse_iso_date("2019-06-03"), kTz);

void write_manifest(const std::filesystem::path& dir, const std::string& extra = "")
{
    write_text(dir / "manifest.json",
               R"({"subject_id": "C001", "group": "control", "timezone": "+02:00")" + extra + "}");
}

std::string motion_lines(std::size_t n, TimeMs start = kT0)
{
    std::string s = "t_ms,x,y,z\n";
    for (std::size_t i = 0; i < n; ++i) s += std::to_string(start + static_cast<TimeMs>(i) * 50) + ",0.5,0.5,0.5\n";
    return s;
}

std::vector<RawSample> motion(TimeMs start, TimeMs end, TimeMs step = 50)
{
    std::vector<RawSample> v;
    for (TimeMs t = start; t < end; t += step) v.push_back({t, 1.0, 0.0, 0.0});
    return v;
}

/// 5 Hz ticks reporting the latest beat, as the watch does.
std::vector<RawRRSample> ticks_from_beats(const std::vector<Beat>& beats, TimeMs start, TimeMs end)
{
    std::vector<RawRRSample> out;
    std::size_t k = 0;
    bool have = false;
    for (TimeMs t = start; t < end; t += 200) {
        while (k < beats.size() && beats[k].t_ms <= static_cast<double>(t)) {
            ++k;
            have = true;
        }
        if (have) out.push_back({t, beats[k - 1].rr_ms});
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Files

TEST_CASE("manifest parsing")
{
    TempDir dir("manifest");
    write_manifest(dir.path(), R"(, "recording": {"first_day": "2019-06-03", "last_day": "2019-07-02"}, "motion_rate_hz": 10)");
    const Manifest m = parse_manifest(dir / "manifest.json");
    CHECK(m.subject_id == "C001");
    CHECK(m.group == Group::control);
    CHECK(m.timezone.minutes == 120);
    CHECK(*m.recording_first_day == parse_iso_date("2019-06-03"));
    CHECK(m.expected_motion_count() == 6000);

    write_text(dir / "bad.json", R"({"subject_id": "C001", "group": "ctrl", "timezone": "+02:00"})");
    CHECK_THROWS_AS(parse_manifest(dir / "bad.json"), IngestError);
    CHECK_THROWS_AS(parse_manifest(dir / "absent.json"), IngestError);
}

TEST_CASE("well-formed directory populates every stream")
{
    TempDir dir("full");
    write_manifest(dir.path());
    write_text(dir / "acc.csv", motion_lines(100));
    write_text(dir / "gyr.csv", motion_lines(100));
    write_text(dir / "rr.csv", "t_ms,rr_ms\n1000,800\n1200,800\n1800,810\n");
    write_text(dir / "sleep.csv", "start_ms,end_ms\n0,1000\n");
    write_text(dir / "steps.csv", "bucket_start_ms,steps\n0,12\n600000,30\n");
    const SubjectData d = parse_subject_dir(dir.path());
    CHECK(d.acc.size() == 100);
    CHECK(d.gyr.size() == 100);
    CHECK(d.rr.size() == 3);
    CHECK(d.sleep.intervals().size() == 1);
    CHECK(d.steps.size() == 2);
    CHECK(d.warnings.empty());
}

TEST_CASE("missing gyr file leaves the stream empty with a warning")
{
    TempDir dir("nogyr");
    write_manifest(dir.path());
    write_text(dir / "acc.csv", motion_lines(10));
    write_text(dir / "rr.csv", "t_ms,rr_ms\n");
    write_text(dir / "sleep.csv", "start_ms,end_ms\n");
    write_text(dir / "steps.csv", "bucket_start_ms,steps\n");
    const SubjectData d = parse_subject_dir(dir.path());
    CHECK(d.gyr.empty());
    CHECK(d.acc.size() == 10);
    REQUIRE(d.warnings.size() == 1);
    CHECK(d.warnings[0].find("gyr.csv") != std::string::npos);
}

TEST_CASE("missing manifest is fatal")
{
    TempDir dir("nomanifest");
    write_text(dir / "acc.csv", motion_lines(10));
    CHECK_THROWS_AS(parse_subject_dir(dir.path()), IngestError);
}

TEST_CASE("2% corrupt lines is fatal and names the file")
{
    TempDir dir("corrupt");
    std::string text = motion_lines(98);
    text += "garbage\n1,2,3\n";  // 2 of 100 data lines
    write_text(dir / "acc.csv", text);
    std::vector<std::string> warnings;
    try {
        read_motion_csv(dir / "acc.csv", warnings);
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find("acc.csv") != std::string::npos);
    }
}

TEST_CASE("1% corrupt lines is tolerated with a warning")
{
    TempDir dir("tolerated");
    std::string text = motion_lines(199);
    text += "1,2,x,4\n";
    write_text(dir / "acc.csv", text);
    std::vector<std::string> warnings;
    const auto rows = read_motion_csv(dir / "acc.csv", warnings);
    CHECK(rows.size() == 199);
    CHECK(warnings.size() == 1);
}

TEST_CASE("rows are sorted, exact duplicates dropped, conflicts rejected")
{
    TempDir dir("dups");
    write_text(dir / "rr.csv", "t_ms,rr_ms\n400,810\n200,800\n200,800\n600,820\n");
    std::vector<std::string> w;
    const auto rows = read_rr_csv(dir / "rr.csv", w);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].t_ms == 200);
    CHECK(rows[2].t_ms == 600);

    write_text(dir / "bad.csv", "t_ms,rr_ms\n200,800\n200,900\n");
    CHECK_THROWS_AS(read_rr_csv(dir / "bad.csv", w), IngestError);
}

TEST_CASE("wrong header is fatal")
{
    TempDir dir("header");
    write_text(dir / "rr.csv", "time,rr\n200,800\n");
    std::vector<std::string> w;
    CHECK_THROWS_AS(read_rr_csv(dir / "rr.csv", w), IngestError);
}

TEST_CASE("data outside the recording range is dropped")
{
    TempDir dir("range");
    write_manifest(dir.path(), R"(, "recording": {"first_day": "2019-06-03", "last_day": "2019-06-03"})");
    write_text(dir / "acc.csv", motion_lines(10, kT0 - 250) );
    write_text(dir / "gyr.csv", motion_lines(10, kT0 + kMsPerDay - 250));
    const SubjectData d = parse_subject_dir(dir.path());
    CHECK(d.acc.size() == 5);
    CHECK(d.gyr.size() == 5);
}

TEST_CASE("property: writers and readers round-trip")
{
    TempDir dir("roundtrip");
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 3.0);
    std::vector<RawSample> m;
    for (int i = 0; i < 500; ++i) m.push_back({kT0 + i * 50, n(rng), n(rng), n(rng)});
    std::vector<RawRRSample> rr;
    for (int i = 0; i < 200; ++i) rr.push_back({kT0 + i * 200, std::round(800 + n(rng) * 10)});
    const SleepSchedule sleep({{kT0, kT0 + 1000}, {kT0 + 5000, kT0 + 9000}});
    const std::vector<StepRecord> steps{{kT0, 5}, {kT0 + kStepBucketMs, 0}};

    write_motion_csv(dir / "acc.csv", m);
    write_rr_csv(dir / "rr.csv", rr);
    write_sleep_csv(dir / "sleep.csv", sleep);
    write_steps_csv(dir / "steps.csv", steps);
    std::vector<std::string> w;
    CHECK(read_motion_csv(dir / "acc.csv", w) == m);
    CHECK(read_rr_csv(dir / "rr.csv", w) == rr);
    CHECK(read_sleep_csv(dir / "sleep.csv", w) == sleep);
    CHECK(read_steps_csv(dir / "steps.csv", w) == steps);

    Manifest man;
    man.subject_id = "P007";
    man.group = Group::patient;
    man.timezone = UtcOffset{-300};
    man.recording_first_day = 18000;
    man.recording_last_day = 18040;
    man.motion_rate_hz = 12.5;
    write_text(dir / "manifest.json", manifest_to_json(man));
    const Manifest back = parse_manifest(dir / "manifest.json");
    CHECK(back.subject_id == man.subject_id);
    CHECK(back.group == man.group);
    CHECK(back.timezone == man.timezone);
    CHECK(back.recording_first_day == man.recording_first_day);
    CHECK(back.recording_last_day == man.recording_last_day);
    CHECK(back.motion_rate_hz == man.motion_rate_hz);
}

// ---------------------------------------------------------------------------
// RR cleaning

TEST_CASE("duplicated 5 Hz values collapse to beats")
{
    const std::vector<RawRRSample> raw{{0, 800}, {200, 800}, {400, 800}, {600, 820}};
    const auto beats = clean_rr(raw);
    REQUIRE(beats.size() == 2);
    CHECK(beats[0].rr_ms == 800);
    CHECK(beats[1].rr_ms == 820);
}

TEST_CASE("long interval is replaced by interpolated beats conserving elapsed time")
{
    // Beats at 780, 1580, 4080 (2500 ms artifact), 4880, 5700 reported on 5 Hz ticks.
    const std::vector<Beat> truth{{780, 780}, {1580, 800}, {4080, 2500}, {4880, 800}, {5700, 820}};
    const auto raw = ticks_from_beats(truth, 0, 6000);
    const auto beats = clean_rr(raw);

    // tick timestamps: 800, 1600, 4200, 5000, 5800
    REQUIRE(beats.size() == 7);
    const std::vector<double> rr{780, 800, 2600.0 / 3.0, 2600.0 / 3.0, 2600.0 / 3.0, 800, 820};
    for (std::size_t i = 0; i < rr.size(); ++i) CHECK(beats[i].rr_ms == doctest::Approx(rr[i]).epsilon(1e-12));
    CHECK(beats[2].rr_ms + beats[3].rr_ms + beats[4].rr_ms == doctest::Approx(2600.0));
    for (std::size_t i = 2; i <= 4; ++i) CHECK(std::fabs(beats[i].rr_ms - 800.0) < 70.0);
    CHECK(beats.back().t_ms == doctest::Approx(5820.0));
}

TEST_CASE("interpolation on exact beat timestamps")
{
    const std::vector<RawRRSample> raw{{780, 780}, {1580, 800}, {4880, 800}, {5700, 820}};
    const auto beats = interpolate_gaps(std::span<const RawRRSample>(raw));
    const std::vector<double> rr{780, 800, 2500.0 / 3, 2500.0 / 3, 2500.0 / 3, 800, 820};
    const std::vector<double> t{780, 1580, 1580 + 2500.0 / 3, 1580 + 5000.0 / 3, 4080, 4880, 5700};
    REQUIRE(beats.size() == rr.size());
    for (std::size_t i = 0; i < rr.size(); ++i) {
        CHECK(beats[i].rr_ms == doctest::Approx(rr[i]));
        CHECK(beats[i].t_ms == doctest::Approx(t[i]));
    }
}

TEST_CASE("out-of-range values are rejected")
{
    const std::vector<RawRRSample> raw{{0, 299}, {1, 300}, {2, 2000}, {3, 2001}, {4, 150}};
    const auto kept = drop_out_of_range(raw);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].rr_ms == 300);
    CHECK(kept[1].rr_ms == 2000);
}

TEST_CASE("flatline yields an empty series")
{
    std::vector<RawRRSample> raw;
    for (int i = 0; i < 1000; ++i) raw.push_back({i * 200, 800});
    CHECK(drop_consecutive_duplicates(raw).size() == 1);
    CHECK(clean_rr(raw).empty());
}

TEST_CASE("gap longer than max_fill starts a new segment")
{
    const std::vector<RawRRSample> raw{{1000, 800}, {1800, 805}, {20000, 810}, {20810, 810.5}};
    const auto beats = clean_rr(raw);
    REQUIRE(beats.size() == 4);
    CHECK(beats[2].t_ms == 20000);
    CHECK(beats[3].t_ms == doctest::Approx(20810.5));
}

TEST_CASE("property: clean_rr output is ordered, in range, a fixed point and deterministic")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Beat> truth;
        std::normal_distribution<double> n(0.0, 40.0);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double t = 0.0;
        while (t < 600000.0) {
            const double rr = std::round(std::clamp(800.0 + n(rng), 350.0, 1900.0));
            t += rr;
            const double reported = u(rng) < 0.03 ? (u(rng) < 0.5 ? 150.0 : 2600.0) : rr;
            truth.push_back({t, reported});
        }
        auto raw = ticks_from_beats(truth, 0, 600000);
        // a dropout
        std::erase_if(raw, [&](const RawRRSample& s) { return s.t_ms > 200000 && s.t_ms < 260000; });

        const auto beats = clean_rr(raw);
        REQUIRE(beats.size() > 100);
        for (std::size_t i = 0; i < beats.size(); ++i) {
            CHECK(beats[i].rr_ms >= 300.0);
            CHECK(beats[i].rr_ms <= 2000.0);
            if (i) CHECK(beats[i].t_ms >= beats[i - 1].t_ms);
        }
        CHECK(interpolate_gaps(std::span<const Beat>(beats)) == beats);
        CHECK(clean_rr(raw) == beats);
    }
}

// ---------------------------------------------------------------------------
// Segmentation

TEST_CASE("two hours of continuous awake data")
{
    const auto acc = motion(kT0, kT0 + 2 * kMsPerHour);
    const auto gyr = motion(kT0, kT0 + 2 * kMsPerHour);
    std::vector<Beat> beats;
    for (double t = kT0 + 400.0; t < kT0 + 2.0 * kMsPerHour; t += 800.0) beats.push_back({t, 800.0});
    SegmentationInput in{acc, gyr, beats, {}, kTz, 12000};
    const Segmentation seg = segment_windows(in, SleepSchedule{}, {});
    CHECK(seg.grid_origin_ms == kT0);
    CHECK(seg.acc.size() == 12);
    CHECK(seg.gyr.size() == 12);
    CHECK(seg.rr.size() == 2);
    for (const auto& w : seg.acc) {
        CHECK(w.state == State::awake);
        CHECK(w.window.is_valid());
    }
    for (const auto& c : seg.rr) CHECK(c.state == State::awake);
}

TEST_CASE("grid starts at the first local hour boundary after the first sample")
{
    const auto acc = motion(kT0 + 25 * kMsPerMinute, kT0 + 2 * kMsPerHour);
    SegmentationInput in{acc, {}, {}, {}, kTz, 12000};
    const Segmentation seg = segment_windows(in, SleepSchedule{}, {});
    CHECK(seg.grid_origin_ms == kT0 + kMsPerHour);
    CHECK(seg.acc.size() == 6);
}

TEST_CASE("state tagging by majority overlap")
{
    const TimeRange w{0, kMotionWindowMs};
    CHECK(tag_state(w, SleepSchedule({{0, 6 * kMsPerMinute}})) == State::asleep);
    CHECK(tag_state(w, SleepSchedule({{0, 5 * kMsPerMinute}})) == State::asleep);
    CHECK(tag_state(w, SleepSchedule({{0, 4 * kMsPerMinute}})) == State::awake);
    CHECK(tag_state(w, SleepSchedule({{-kMsPerHour, 3 * kMsPerMinute}, {7 * kMsPerMinute, kMsPerHour}})) ==
          State::asleep);
}

TEST_CASE("windows inside the lockdown exclusion are dropped")
{
    const UtcOffset athens{120};
    const TimeRange lockdown = local_date_range(parse_iso_date("2020-03-15"), parse_iso_date("2020-05-10"), athens);
    const TimeMs day_before = local_midnight(parse_iso_date("2020-03-14"), athens) + 22 * kMsPerHour;
    const auto acc = motion(day_before, day_before + 4 * kMsPerHour, 1000);
    std::vector<StepRecord> steps;
    for (TimeMs t = day_before; t < day_before + 4 * kMsPerHour; t += kStepBucketMs) steps.push_back({t, 10});
    SegmentationInput in{acc, {}, {}, steps, athens, 600};
    const std::vector<TimeRange> excl{lockdown};
    const Segmentation seg = segment_windows(in, SleepSchedule{}, excl);
    CHECK(seg.acc.size() == 12);  // 22:00 to midnight only
    for (const auto& w : seg.acc) CHECK(w.window.range().end_ms <= lockdown.start_ms);
    CHECK(seg.steps.size() == 12);

    const Segmentation all = segment_windows(in, SleepSchedule{}, {});
    CHECK(all.acc.size() == 24);
}

TEST_CASE("property: windows partition the stream and steps are conserved")
{
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> gap(0, 3);
    std::vector<RawSample> acc;
    std::vector<StepRecord> steps;
    TimeMs t = kT0 + 17;
    while (t < kT0 + 10 * kMsPerHour) {
        if (gap(rng) == 0) t += 13 * kMsPerMinute;
        const TimeMs end = t + 20 * kMsPerMinute;
        for (; t < end; t += 500) acc.push_back({t, 0.1, 0.2, 0.3});
    }
    for (TimeMs s = kT0; s < kT0 + 10 * kMsPerHour; s += kStepBucketMs) steps.push_back({s, gap(rng) * 7});
    SegmentationInput in{acc, {}, {}, steps, kTz, 1200};
    const Segmentation seg = segment_windows(in, SleepSchedule{}, {});

    std::size_t covered = 0;
    for (std::size_t i = 0; i < seg.acc.size(); ++i) {
        const auto& w = seg.acc[i].window;
        CHECK((w.window_start_ms - seg.grid_origin_ms) % kMotionWindowMs == 0);
        if (i) CHECK(w.window_start_ms >= seg.acc[i - 1].window.range().end_ms);
        for (const auto& s : w.samples) CHECK(w.range().contains(s.t_ms));
        covered += w.samples.size();
    }
    const auto after_origin = std::count_if(acc.begin(), acc.end(), [&](const RawSample& s) {
        return s.t_ms >= seg.grid_origin_ms;
    });
    CHECK(covered == static_cast<std::size_t>(after_origin));

    auto total = [](const std::vector<StepRecord>& v) {
        return std::accumulate(v.begin(), v.end(), std::int64_t{0},
                               [](std::int64_t a, const StepRecord& s) { return a + s.steps; });
    };
    CHECK(total(seg.steps) == total(steps));
}
