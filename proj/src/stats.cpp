#include "phenosig/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace phenosig {

namespace {

struct Ranked {
    double rank_sum_a = 0.0;
    double tie_term = 0.0;  // sum over tie groups of t^3 - t
    bool has_ties = false;
};

Ranked rank_samples(std::span<const double> a, std::span<const double> b)
{
    struct Item {
        double v;
        bool from_a;
    };
    std::vector<Item> all;
    all.reserve(a.size() + b.size());
    for (double v : a) all.push_back({v, true});
    for (double v : b) all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const Item& x, const Item& y) { return x.v < y.v; });

    Ranked r;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].v == all[i].v) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        const double t = static_cast<double>(j - i);
        if (j - i > 1) {
            r.has_ties = true;
            r.tie_term += t * t * t - t;
        }
        for (std::size_t k = i; k < j; ++k)
            if (all[k].from_a) r.rank_sum_a += midrank;
        i = j;
    }
    return r;
}

/// Number of arrangements giving each U value, for n first-sample and m
/// second-sample items (coefficients of the Gaussian binomial).
std::vector<double> u_counts(std::size_t n, std::size_t m)
{
    // f[i][j] over i in 0..n, stored row by row for fixed j progression
    std::vector<std::vector<std::vector<double>>> f(n + 1, std::vector<std::vector<double>>(m + 1));
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; j <= m; ++j) {
            if (i == 0 || j == 0) {
                f[i][j] = {1.0};
                continue;
            }
            std::vector<double> poly(i * j + 1, 0.0);
            // last item from the first sample: it exceeds all j second-sample items
            const auto& left = f[i - 1][j];
            for (std::size_t u = 0; u < left.size(); ++u) poly[u + j] += left[u];
            const auto& down = f[i][j - 1];
            for (std::size_t u = 0; u < down.size(); ++u) poly[u] += down[u];
            f[i][j] = std::move(poly);
        }
    }
    return f[n][m];
}

double normal_two_tailed(double z)
{
    return std::erfc(z / std::sqrt(2.0));
}

}  // namespace

double exact_u_cdf(std::size_t n, std::size_t m, double u)
{
    const auto counts = u_counts(n, m);
    double total = 0.0, below = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        total += counts[k];
        if (static_cast<double>(k) <= u + 1e-9) below += counts[k];
    }
    return below / total;
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b, std::size_t exact_max_n)
{
    if (a.size() < 2 || b.size() < 2) throw StatsError("Mann-Whitney U needs at least two values per sample");
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    const Ranked r = rank_samples(a, b);

    MannWhitneyResult res;
    res.u_a = r.rank_sum_a - n * (n + 1.0) / 2.0;
    res.u_b = n * m - res.u_a;

    if (!r.has_ties && std::min(a.size(), b.size()) <= exact_max_n) {
        res.method = UMethod::exact;
        const double lower = exact_u_cdf(a.size(), b.size(), res.u_a);
        const double upper = exact_u_cdf(a.size(), b.size(), n * m - res.u_a);  // P(U >= u) by symmetry
        res.p = std::min(1.0, 2.0 * std::min(lower, upper));
        return res;
    }

    res.method = UMethod::normal;
    const double total = n + m;
    const double var = n * m / 12.0 * ((total + 1.0) - r.tie_term / (total * (total - 1.0)));
    if (!(var > 0.0)) {
        res.p = 1.0;
        return res;
    }
    const double dev = std::max(0.0, std::fabs(res.u_a - n * m / 2.0) - 0.5);
    res.p = std::min(1.0, normal_two_tailed(dev / std::sqrt(var)));
    return res;
}

std::vector<double> benjamini_hochberg(std::span<const double> p)
{
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) throw StatsError("p-value outside [0, 1]");
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t rank = m; rank >= 1; --rank) {
        const std::size_t idx = order[rank - 1];
        running = std::min(running, static_cast<double>(m) / static_cast<double>(rank) * p[idx]);
        adjusted[idx] = std::min(running, 1.0);
    }
    return adjusted;
}

double quantile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty()) throw StatsError("quantile of an empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxplotStats boxplot_stats(std::span<const double> sample)
{
    if (sample.empty()) throw StatsError("boxplot of an empty sample");
    std::vector<double> v(sample.begin(), sample.end());
    std::sort(v.begin(), v.end());
    BoxplotStats b;
    b.median = quantile_sorted(v, 0.5);
    b.q1 = quantile_sorted(v, 0.25);
    b.q3 = quantile_sorted(v, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.q1;
    b.whisker_hi = b.q3;
    bool have_lo = false, have_hi = false;
    for (double x : v) {
        if (x < lo_fence || x > hi_fence) {
            b.outliers.push_back(x);
            continue;
        }
        if (!have_lo) {
            b.whisker_lo = x;
            have_lo = true;
        }
        b.whisker_hi = x;
        have_hi = true;
    }
    if (!have_hi) b.whisker_hi = b.q3;
    return b;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Statistic s)
{
    return s == Statistic::mean ? "mean" : "std";
}

std::string_view to_string(Block b)
{
    switch (b) {
    case Block::awake: return "awake";
    case Block::asleep: return "asleep";
    case Block::daily: return "daily";
    }
    return "?";
}

std::string_view to_string(DailyMeasure d)
{
    return d == DailyMeasure::sleep_wake_ratio ? "sleep_wake_ratio" : "steps_per_day";
}

namespace {

void fill_test(TestResult& t)
{
    auto describe_group = [](std::vector<double>& v, double& median, double& iqr) {
        std::sort(v.begin(), v.end());
        if (v.empty()) return;
        median = quantile_sorted(v, 0.5);
        iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
    };
    t.n_control = t.control_values.size();
    t.n_patient = t.patient_values.size();
    describe_group(t.control_values, t.control_median, t.control_iqr);
    describe_group(t.patient_values, t.patient_median, t.patient_iqr);
    if (t.n_control < 2 || t.n_patient < 2) {
        t.skipped = true;
        t.p_raw = std::nan("");
        t.p_adjusted = std::nan("");
        return;
    }
    const MannWhitneyResult mw = mann_whitney_u(t.control_values, t.patient_values);
    t.u_statistic = mw.u_a;
    t.p_raw = mw.p;
}

}  // namespace

std::vector<TestResult> run_comparisons(std::span<const SubjectSummary> summaries, const ComparisonConfig& config)
{
    const auto n_control = std::count_if(summaries.begin(), summaries.end(),
                                         [](const SubjectSummary& s) { return s.group == Group::control; });
    const auto n_patient = static_cast<std::ptrdiff_t>(summaries.size()) - n_control;
    if (n_control < 2 || n_patient < 2) {
        throw StatsError("need at least two subjects per group (control " + std::to_string(n_control) +
                         ", patient " + std::to_string(n_patient) + ")");
    }

    std::vector<TestResult> results;
    for (State state : kAllStates) {
        for (Feature f : config.features) {
            for (Statistic stat : {Statistic::mean, Statistic::std}) {
                TestResult t;
                t.feature = std::string(to_string(f)) + "_" + std::string(to_string(stat));
                t.block = state == State::awake ? Block::awake : Block::asleep;
                for (const SubjectSummary& s : summaries) {
                    const auto& fs = s.at(f, state);
                    if (!fs) continue;
                    std::optional<double> v = stat == Statistic::mean ? std::optional<double>(fs->mean) : fs->stddev;
                    if (!v || !std::isfinite(*v)) continue;
                    (s.group == Group::control ? t.control_values : t.patient_values).push_back(*v);
                }
                fill_test(t);
                results.push_back(std::move(t));
            }
        }
    }
    if (config.include_daily) {
        for (DailyMeasure d : {DailyMeasure::sleep_wake_ratio, DailyMeasure::steps_per_day}) {
            for (Statistic stat : {Statistic::mean, Statistic::std}) {
                TestResult t;
                t.feature = std::string(to_string(d)) + "_" + std::string(to_string(stat));
                t.block = Block::daily;
                for (const SubjectSummary& s : summaries) {
                    if (!s.daily.eligible) continue;
                    std::optional<double> v;
                    if (d == DailyMeasure::sleep_wake_ratio)
                        v = stat == Statistic::mean ? s.daily.sleep_wake_ratio_mean : s.daily.sleep_wake_ratio_std;
                    else
                        v = stat == Statistic::mean ? s.daily.steps_per_day_mean : s.daily.steps_per_day_std;
                    if (!v || !std::isfinite(*v)) continue;
                    (s.group == Group::control ? t.control_values : t.patient_values).push_back(*v);
                }
                fill_test(t);
                results.push_back(std::move(t));
            }
        }
    }

    auto adjust = [&](auto in_family) {
        std::vector<std::size_t> idx;
        std::vector<double> p;
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (results[i].skipped || !in_family(results[i])) continue;
            idx.push_back(i);
            p.push_back(results[i].p_raw);
        }
        const auto q = benjamini_hochberg(p);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            results[idx[k]].p_adjusted = q[k];
            results[idx[k]].significant = q[k] < config.alpha;
        }
    };
    if (config.families == FamilyScope::global) {
        adjust([](const TestResult&) { return true; });
    } else {
        for (Block b : {Block::awake, Block::asleep, Block::daily})
            adjust([b](const TestResult& t) { return t.block == b; });
    }
    return results;
}

}  // namespace phenosig
