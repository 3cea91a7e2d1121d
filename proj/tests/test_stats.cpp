#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "oracles.hpp"
#include "phenosig/report.hpp"
#include "phenosig/stats.hpp"

using namespace phenosig;

namespace {

std::vector<double> distinct_sample(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

SubjectSummary subject(const std::string& id, Group g, double base, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    SubjectSummary s;
    s.subject_id = id;
    s.group = g;
    for (Feature f : kAllFeatures)
        for (State st : kAllStates) s.at(f, st) = FeatureStat{50, base + n(rng), 1.0 + 0.1 * std::fabs(n(rng))};
    s.daily.eligible = true;
    s.daily.qualifying_days = 30;
    s.daily.sleep_wake_ratio_mean = 0.5 + 0.05 * n(rng);
    s.daily.sleep_wake_ratio_std = 0.1 + 0.01 * std::fabs(n(rng));
    s.daily.steps_per_day_mean = 6000 + 500 * n(rng);
    s.daily.steps_per_day_std = 1500 + 100 * std::fabs(n(rng));
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mann-Whitney U

TEST_CASE("mann-whitney: separated triples")
{
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    const MannWhitneyResult r = mann_whitney_u(a, b);
    CHECK(r.u_a == 0.0);
    CHECK(r.u_b == 9.0);
    CHECK(r.method == UMethod::exact);
    CHECK(r.p == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(oracle::mwu_exact_p(a, b) == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("mann-whitney: identical samples give p near one")
{
    std::mt19937_64 rng(20);
    const auto a = distinct_sample(rng, 25);
    CHECK(mann_whitney_u(a, a).p > 0.95);
    const auto small = distinct_sample(rng, 5);
    CHECK(mann_whitney_u(small, small).p > 0.95);
}

TEST_CASE("mann-whitney: exact p matches enumeration for 8 vs 8")
{
    std::mt19937_64 rng(21);
    const auto a = distinct_sample(rng, 8), b = distinct_sample(rng, 8);
    const MannWhitneyResult r = mann_whitney_u(a, b);
    CHECK(r.method == UMethod::exact);
    CHECK(std::fabs(r.p - oracle::mwu_exact_p(a, b)) <= 1e-10);
    CHECK(r.u_a == oracle::u_statistic(a, b));
}

TEST_CASE("mann-whitney: exact cdf sums to one and is symmetric")
{
    for (std::size_t n = 1; n <= 8; ++n) {
        for (std::size_t m = 1; m <= 8; ++m) {
            const double nm = static_cast<double>(n * m);
            CHECK(exact_u_cdf(n, m, nm) == doctest::Approx(1.0).epsilon(1e-14));
            for (double u = 0; u < nm; u += 1.0)
                CHECK(exact_u_cdf(n, m, u) == doctest::Approx(1.0 - exact_u_cdf(n, m, nm - u - 1.0)).epsilon(1e-12));
        }
    }
}

TEST_CASE("mann-whitney: large samples use the normal approximation with ties")
{
    const std::vector<double> a{1, 1, 2, 2, 3, 3, 4, 4, 5, 5}, b{3, 3, 4, 4, 5, 5, 6, 6, 7, 7};
    const MannWhitneyResult r = mann_whitney_u(a, b);
    CHECK(r.method == UMethod::normal);
    CHECK(r.u_a == oracle::u_statistic(a, b));
    CHECK(r.u_a == 18.0);
    // tie-corrected variance and continuity correction, by hand
    const double sigma = std::sqrt(10.0 * 10.0 / 12.0 * (21.0 - (4 * 6.0 + 3 * 60.0) / (20.0 * 19.0)));  // tie groups 2,2,4,4,4,2,2
    const double z = (std::fabs(18.0 - 50.0) - 0.5) / sigma;
    CHECK(r.p == doctest::Approx(std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("mann-whitney: too few values")
{
    const std::vector<double> one{1.0}, three{1, 2, 3};
    CHECK_THROWS_AS(mann_whitney_u(one, three), StatsError);
    CHECK_THROWS_AS(mann_whitney_u(three, {}), StatsError);
}

TEST_CASE("property: mann-whitney symmetry and enumeration agreement")
{
    std::mt19937_64 rng(22);
    std::uniform_int_distribution<std::size_t> size(2, 8);
    for (int trial = 0; trial < 60; ++trial) {
        const auto a = distinct_sample(rng, size(rng)), b = distinct_sample(rng, size(rng));
        const MannWhitneyResult ab = mann_whitney_u(a, b), ba = mann_whitney_u(b, a);
        CHECK(ab.u_a + ab.u_b == static_cast<double>(a.size() * b.size()));
        CHECK(ba.u_a == ab.u_b);
        CHECK(ba.p == doctest::Approx(ab.p).epsilon(1e-14));
        CHECK(std::fabs(ab.p - oracle::mwu_exact_p(a, b)) <= 1e-10);
    }
}

TEST_CASE("property: p is invariant under a strictly monotone transform")
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        auto a = distinct_sample(rng, 5 + trial % 20), b = distinct_sample(rng, 7 + trial % 15);
        const double p = mann_whitney_u(a, b).p;
        for (auto* v : {&a, &b})
            for (double& x : *v) x = std::exp(x / 20.0) - 3.0 * std::cbrt(-x);
        CHECK(mann_whitney_u(a, b).p == doctest::Approx(p).epsilon(1e-12));
    }
}

// ---------------------------------------------------------------------------
// Benjamini-Hochberg

TEST_CASE("benjamini-hochberg examples")
{
    CHECK(benjamini_hochberg(std::vector<double>{0.03}) == std::vector<double>{0.03});
    const auto q = benjamini_hochberg(std::vector<double>{0.01, 0.02, 0.03, 0.04});
    for (double v : q) CHECK(v == doctest::Approx(0.04).epsilon(1e-15));
    const auto two = benjamini_hochberg(std::vector<double>{0.001, 0.9});
    CHECK(two[0] == doctest::Approx(0.002).epsilon(1e-15));
    CHECK(two[1] == 0.9);
    CHECK(benjamini_hochberg(std::vector<double>{}).empty());
    CHECK_THROWS_AS(benjamini_hochberg(std::vector<double>{0.5, 1.2}), StatsError);
    CHECK_THROWS_AS(benjamini_hochberg(std::vector<double>{-0.1}), StatsError);
    CHECK_THROWS_AS(benjamini_hochberg(std::vector<double>{std::nan("")}), StatsError);
}

TEST_CASE("property: benjamini-hochberg matches the definition and its bounds")
{
    std::mt19937_64 rng(24);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(size(rng));
        for (auto& x : p) x = trial % 3 ? u(rng) * u(rng) : std::round(u(rng) * 20.0) / 20.0;  // some ties
        const auto q = benjamini_hochberg(p);
        const auto ref = oracle::bh(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(std::fabs(q[i] - ref[i]) <= 1e-12);
            CHECK(q[i] >= p[i]);
            CHECK(q[i] <= 1.0);
        }
        std::vector<std::size_t> order(p.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto x, auto y) { return p[x] < p[y]; });
        for (std::size_t k = 1; k < order.size(); ++k) CHECK(q[order[k]] >= q[order[k - 1]]);
    }
}

// ---------------------------------------------------------------------------
// Boxplots

TEST_CASE("boxplot examples")
{
    std::vector<double> hundred(100);
    std::iota(hundred.begin(), hundred.end(), 1.0);
    std::shuffle(hundred.begin(), hundred.end(), std::mt19937_64(1));
    const BoxplotStats b = boxplot_stats(hundred);
    CHECK(b.median == 50.5);
    CHECK(b.q1 == 25.75);
    CHECK(b.q3 == 75.25);
    CHECK(b.whisker_lo == 1.0);
    CHECK(b.whisker_hi == 100.0);
    CHECK(b.outliers.empty());

    const BoxplotStats c = boxplot_stats(std::vector<double>(9, 4.2));
    CHECK(c.median == 4.2);
    CHECK(c.q1 == 4.2);
    CHECK(c.q3 == 4.2);
    CHECK(c.whisker_lo == 4.2);
    CHECK(c.whisker_hi == 4.2);
    CHECK(c.outliers.empty());

    const BoxplotStats o = boxplot_stats(std::vector<double>{1, 2, 3, 100});
    CHECK(o.q1 == 1.75);
    CHECK(o.q3 == 27.25);
    CHECK(o.whisker_hi == 3.0);
    CHECK(o.outliers == std::vector<double>{100.0});
}

TEST_CASE("property: boxplot structure")
{
    std::mt19937_64 rng(25);
    std::uniform_int_distribution<std::size_t> size(1, 80);
    std::lognormal_distribution<double> ln(0.0, 1.2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(size(rng));
        for (auto& v : x) v = ln(rng);
        const BoxplotStats b = boxplot_stats(x);
        CHECK(b.q1 <= b.median);
        CHECK(b.median <= b.q3);
        CHECK(b.median == doctest::Approx(oracle::quantile(x, 0.5)).epsilon(1e-14));
        CHECK(b.q1 == doctest::Approx(oracle::quantile(x, 0.25)).epsilon(1e-14));
        CHECK(b.q3 == doctest::Approx(oracle::quantile(x, 0.75)).epsilon(1e-14));
        CHECK(std::find(x.begin(), x.end(), b.whisker_lo) != x.end());
        CHECK(std::find(x.begin(), x.end(), b.whisker_hi) != x.end());
        CHECK(std::is_sorted(b.outliers.begin(), b.outliers.end()));
        std::size_t inside = 0;
        for (double v : x) inside += v >= b.whisker_lo && v <= b.whisker_hi;
        CHECK(inside + b.outliers.size() == x.size());
    }
}

// ---------------------------------------------------------------------------
// Cohort comparisons and report

TEST_CASE("planted shift is significant after adjustment")
{
    std::mt19937_64 rng(26);
    std::vector<SubjectSummary> subjects;
    for (int i = 0; i < 20; ++i) subjects.push_back(subject("C" + std::to_string(i), Group::control, 10.0, rng));
    for (int i = 0; i < 20; ++i) {
        SubjectSummary s = subject("P" + std::to_string(i), Group::patient, 10.0, rng);
        s.at(Feature::acc_STE, State::asleep)->mean += 2.0;  // about 1.5 IQR of a unit normal
        subjects.push_back(s);
    }
    const auto results = run_comparisons(subjects);
    CHECK(results.size() == 60);
    std::size_t significant = 0;
    for (const TestResult& t : results) {
        CHECK(t.p_adjusted >= t.p_raw);
        CHECK(t.significant == (t.p_adjusted < 0.05));
        significant += t.significant;
        if (t.feature == "acc_STE_mean" && t.block == Block::asleep) {
            CHECK(t.significant);
            CHECK(t.n_control == 20);
            CHECK(t.n_patient == 20);
            CHECK(t.patient_median > t.control_median);
        }
    }
    CHECK(significant <= 3);
}

TEST_CASE("comparisons: too few subjects and skipped features")
{
    std::mt19937_64 rng(27);
    std::vector<SubjectSummary> only_controls;
    for (int i = 0; i < 5; ++i) only_controls.push_back(subject("C" + std::to_string(i), Group::control, 1.0, rng));
    CHECK_THROWS_AS(run_comparisons(only_controls), StatsError);

    std::vector<SubjectSummary> s = only_controls;
    for (int i = 0; i < 3; ++i) {
        SubjectSummary p = subject("P" + std::to_string(i), Group::patient, 1.0, rng);
        p.at(Feature::sampen, State::asleep).reset();
        if (i) p.daily.eligible = false;
        s.push_back(p);
    }
    const auto results = run_comparisons(s);
    for (const TestResult& t : results) {
        const bool expect_skip = (t.feature.rfind("sampen_", 0) == 0 && t.block == Block::asleep) || t.block == Block::daily;
        CHECK(t.skipped == expect_skip);
        if (t.skipped) CHECK_FALSE(t.significant);
    }
}

TEST_CASE("global family adjusts every test together")
{
    std::mt19937_64 rng(28);
    std::vector<SubjectSummary> s;
    for (int i = 0; i < 6; ++i) s.push_back(subject("C" + std::to_string(i), Group::control, 1.0, rng));
    for (int i = 0; i < 6; ++i) s.push_back(subject("P" + std::to_string(i), Group::patient, 1.0, rng));
    ComparisonConfig cfg;
    cfg.families = FamilyScope::global;
    const auto results = run_comparisons(s, cfg);
    std::vector<double> raw;
    for (const TestResult& t : results) raw.push_back(t.p_raw);
    const auto ref = oracle::bh(raw);
    for (std::size_t i = 0; i < results.size(); ++i) CHECK(std::fabs(results[i].p_adjusted - ref[i]) <= 1e-12);
}

TEST_CASE("median (IQR) cells")
{
    CHECK(format_median_iqr(6.87, 1.24) == "6.87 (1.24)");
    CHECK(format_median_iqr(6.8712, 1.2449) == "6.87 (1.24)");
    CHECK(format_median_iqr(0.0123, 0.0046) == "0.012 (0.005)");
    CHECK(format_median_iqr(9876.4, 1234.5) == "9876 (1234)");
    CHECK(format_p(0.0004) == "<0.001");
    CHECK(format_p(0.0234) == "0.023");
    CHECK(display_name("acc_STE_std") == "acc STE std");
}

TEST_CASE("rendered tables")
{
    TestResult t;
    t.feature = "acc_STE_mean";
    t.block = Block::awake;
    t.control_values = {5.0, 6.87, 8.0};
    t.patient_values = {1.0, 2.0, 3.0};
    t.n_control = 3;
    t.n_patient = 3;
    t.control_median = 6.87;
    t.control_iqr = 1.24;
    t.patient_median = 2.0;
    t.patient_iqr = 1.0;
    t.p_raw = 0.1;
    t.p_adjusted = 0.1;
    const std::vector<TestResult> rs{t};
    const std::string md = render_markdown(rs);
    CHECK(md.find("| acc STE mean | awake | 6.87 (1.24) | 2.00 (1.00) | 0.100 | 0.100 | no |") != std::string::npos);
    const std::string csv = render_csv(rs);
    CHECK(csv.find("acc_STE_mean,awake,6.87 (1.24),2.00 (1.00),0.1,0.1,false,3,3,") != std::string::npos);
    const auto js = nlohmann::json::parse(render_boxplot_json(rs));
    REQUIRE(js.size() == 2);
    CHECK(js[0]["group"] == "control");
    CHECK(js[0]["median"] == 6.87);
    CHECK(js[1]["group"] == "patient");
    CHECK(js[1]["q1"] == 1.5);
}
