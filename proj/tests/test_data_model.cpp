#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "phenosig/data_model.hpp"

using namespace phenosig;

namespace {

std::vector<Beat> regular_beats(double start_ms, double rr, std::size_t n)
{
    std::vector<Beat> beats;
    double t = start_ms;
    for (std::size_t i = 0; i < n; ++i) {
        t += rr;
        beats.push_back({t, rr});
    }
    return beats;
}

}  // namespace

TEST_CASE("enum names round-trip")
{
    for (Feature f : kAllFeatures) CHECK(parse_feature(to_string(f)) == f);
    for (State s : kAllStates) CHECK(parse_state(to_string(s)) == s);
    for (Group g : {Group::control, Group::patient}) CHECK(parse_group(to_string(g)) == g);
    for (Sensor s : {Sensor::acc, Sensor::gyr}) CHECK(parse_sensor(to_string(s)) == s);
    CHECK_THROWS_AS(parse_feature("acc_energy"), DomainError);
    CHECK_THROWS_AS(parse_state("dozing"), DomainError);
}

TEST_CASE("utc offsets")
{
    CHECK(parse_utc_offset("UTC").minutes == 0);
    CHECK(parse_utc_offset("Z").minutes == 0);
    CHECK(parse_utc_offset("+02:00").minutes == 120);
    CHECK(parse_utc_offset("-05:30").minutes == -330);
    CHECK(parse_utc_offset("+0300").minutes == 180);
    CHECK(format_utc_offset(UtcOffset{-330}) == "-05:30");
    CHECK_THROWS_AS(parse_utc_offset("Europe/Athens"), DomainError);
    CHECK_THROWS_AS(parse_utc_offset("+25:00"), DomainError);
}

TEST_CASE("iso dates")
{
    CHECK(parse_iso_date("1970-01-01") == 0);
    CHECK(parse_iso_date("2020-03-15") == 18336);
    CHECK(format_iso_date(18336) == "2020-03-15");
    CHECK(format_iso_date(parse_iso_date("2020-02-29")) == "2020-02-29");
    CHECK_THROWS_AS(parse_iso_date("2019-02-29"), DomainError);
    CHECK_THROWS_AS(parse_iso_date("2020-13-01"), DomainError);
    CHECK_THROWS_AS(parse_iso_date("20-01-01"), DomainError);
    for (std::int64_t d = -800; d < 30000; d += 37) CHECK(parse_iso_date(format_iso_date(d)) == d);
}

TEST_CASE("local calendar")
{
    const UtcOffset athens{120};
    const TimeMs midnight = local_midnight(parse_iso_date("2020-03-15"), athens);
    CHECK(midnight == 18336 * kMsPerDay - 2 * kMsPerHour);
    CHECK(local_day(midnight, athens) == 18336);
    CHECK(local_day(midnight - 1, athens) == 18335);
    CHECK(next_local_hour(midnight, athens) == midnight);
    CHECK(next_local_hour(midnight + 1, athens) == midnight + kMsPerHour);
    const UtcOffset half{330};
    const TimeMs t = 1000 * kMsPerHour + 7;
    CHECK((next_local_hour(t, half) + half.ms()) % kMsPerHour == 0);
    const TimeRange r = local_date_range(18336, 18392, athens);
    CHECK(r.start_ms == midnight);
    CHECK(r.duration() == 57 * kMsPerDay);
}

TEST_CASE("time ranges")
{
    const TimeRange a{0, 10}, b{5, 20}, c{10, 12};
    CHECK(a.overlap(b) == 5);
    CHECK(a.overlap(c) == 0);
    CHECK_FALSE(a.intersects(c));
    CHECK(a.contains(0));
    CHECK_FALSE(a.contains(10));
}

TEST_CASE("sleep schedule")
{
    SleepSchedule s({{100, 200}, {0, 50}});
    CHECK(s.intervals().front().start_ms == 0);
    CHECK(s.asleep_overlap({25, 150}) == 25 + 50);
    CHECK_THROWS_AS(SleepSchedule({{0, 100}, {50, 150}}), DomainError);
    CHECK_THROWS_AS(SleepSchedule({{10, 10}}), DomainError);
}

TEST_CASE("motion window validity")
{
    std::vector<RawSample> samples(12000);
    MotionWindow w{Sensor::acc, samples, 0, 12000};
    CHECK(w.is_valid());
    w.samples = std::span<const RawSample>(samples.data(), 10800);
    CHECK(w.is_valid());
    w.samples = std::span<const RawSample>(samples.data(), 10799);
    CHECK_FALSE(w.is_valid());
    w.samples = {};
    CHECK_FALSE(w.is_valid(0.0));
}

TEST_CASE("rr window: full hour is valid")
{
    const auto beats = regular_beats(-400.0, 800.0, 4500);
    const auto v = validate_rr_window(beats, {0, kMsPerHour});
    REQUIRE(std::holds_alternative<RRSeries>(v));
    const auto& s = std::get<RRSeries>(v);
    CHECK(s.intervals.size() == 4500);
    CHECK(s.coverage_seconds == doctest::Approx(3600.0));
    CHECK(s.beat_times.front() == doctest::Approx(0.4));
}

TEST_CASE("rr window: 50 minutes is not enough")
{
    const auto beats = regular_beats(-400.0, 800.0, 3750);  // 3000 s
    const auto v = validate_rr_window(beats, {0, kMsPerHour});
    REQUIRE(std::holds_alternative<RRInvalid>(v));
    CHECK(std::get<RRInvalid>(v).reason == RRInvalidReason::insufficient_coverage);
    CHECK(std::get<RRInvalid>(v).coverage_seconds == doctest::Approx(3000.0));
}

TEST_CASE("rr window: exactly 54 minutes is valid, one beat less is not")
{
    const auto beats = regular_beats(-400.0, 800.0, 4050);  // 3240 s
    CHECK(std::holds_alternative<RRSeries>(validate_rr_window(beats, {0, kMsPerHour})));
    const auto fewer = regular_beats(-400.0, 800.0, 4049);
    CHECK(std::holds_alternative<RRInvalid>(validate_rr_window(fewer, {0, kMsPerHour})));
}

TEST_CASE("rr window: empty and out-of-range input")
{
    std::vector<Beat> none;
    const auto v = validate_rr_window(none, {0, kMsPerHour});
    REQUIRE(std::holds_alternative<RRInvalid>(v));
    CHECK(std::get<RRInvalid>(v).reason == RRInvalidReason::empty);

    auto beats = regular_beats(-400.0, 800.0, 4500);
    for (std::size_t i = 0; i < beats.size(); i += 10) beats[i].rr_ms = 2500.0;
    const auto w = validate_rr_window(beats, {0, kMsPerHour});
    REQUIRE(std::holds_alternative<RRSeries>(w));
    CHECK(std::get<RRSeries>(w).intervals.size() == 4050);
}

TEST_CASE("property: validating a valid series is idempotent")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> rr(600.0, 1100.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Beat> beats;
        double t = 500.0;
        while (t < kMsPerHour) {
            const double r = rr(rng);
            t += r;
            beats.push_back({t, r});
        }
        const auto first = validate_rr_window(beats, {0, kMsPerHour});
        REQUIRE(std::holds_alternative<RRSeries>(first));
        const auto second = validate_rr_window(std::get<RRSeries>(first));
        REQUIRE(std::holds_alternative<RRSeries>(second));
        CHECK(std::get<RRSeries>(second) == std::get<RRSeries>(first));
    }
}

TEST_CASE("property: removing intervals never increases coverage")
{
    std::mt19937_64 rng(4);
    auto beats = regular_beats(0.0, 750.0, 4700);
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 30; ++step) {
        const auto v = validate_rr_window(beats, {0, kMsPerHour}, 0.0);
        const double cov = std::holds_alternative<RRSeries>(v) ? std::get<RRSeries>(v).coverage_seconds
                                                                : std::get<RRInvalid>(v).coverage_seconds;
        CHECK(cov <= prev);
        prev = cov;
        std::uniform_int_distribution<std::size_t> pick(0, beats.size() - 1);
        beats.erase(beats.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
    }
}

TEST_CASE("doubles print shortest and round-trip")
{
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(800.0) == "800");
    CHECK(format_double(-2.5e-7) == "-2.5e-07");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(i % 20) - 10);
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK_THROWS_AS(parse_double("1.5x"), DomainError);
}

TEST_CASE("property: feature records round-trip through csv")
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    std::uniform_int_distribution<int> fi(0, static_cast<int>(kFeatureCount) - 1);
    for (int i = 0; i < 500; ++i) {
        FeatureRecord r{"S" + std::to_string(i), kAllFeatures[static_cast<std::size_t>(fi(rng))],
                        i % 2 ? State::asleep : State::awake, 1559516400000 + i * kMotionWindowMs, u(rng)};
        CHECK(parse_feature_record(to_csv_line(r)) == r);
    }
    CHECK(to_csv_line({"C001", Feature::acc_STE, State::awake, 1000, 6.87}) == "C001,acc_STE,awake,1000,6.87");
    CHECK_THROWS_AS(parse_feature_record("C001,acc_STE,awake,1000"), DomainError);
    CHECK_THROWS_AS(parse_feature_record("C001,acc_STE,awake,1000,1,2"), DomainError);
    CHECK_THROWS_AS(parse_feature_record("C001,foo,awake,1000,1"), DomainError);
}

TEST_CASE("property: subject summaries round-trip through json")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        SubjectSummary s;
        s.subject_id = "P" + std::to_string(trial);
        s.group = trial % 2 ? Group::patient : Group::control;
        for (Feature f : kAllFeatures) {
            for (State st : kAllStates) {
                if ((static_cast<int>(f) + trial) % 5 == 0) continue;
                FeatureStat fs{static_cast<std::size_t>(trial + 1), u(rng), std::nullopt};
                if (trial % 3) fs.stddev = u(rng);
                s.at(f, st) = fs;
            }
        }
        s.daily.qualifying_days = static_cast<std::size_t>(trial);
        s.daily.eligible = trial >= 30;
        if (trial % 2) {
            s.daily.sleep_wake_ratio_mean = u(rng);
            s.daily.steps_per_day_std = u(rng) * 1000;
        }
        CHECK(parse_subject_summary(to_json(s)) == s);
    }
}
