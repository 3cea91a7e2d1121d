#include "phenosig/features_nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace phenosig {

namespace {

double mean_of(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double population_variance(std::span<const double> x)
{
    const double mu = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - mu) * (v - mu);
    return s / static_cast<double>(x.size());
}

bool is_constant(std::span<const double> x)
{
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace

double ls_slope(std::span<const double> x, std::span<const double> y)
{
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

// ---------------------------------------------------------------------------

SampEnResult sample_entropy(std::span<const double> x, int m, double r)
{
    if (m < 1) throw DegenerateInput("sample entropy needs m >= 1");
    const std::size_t mm = static_cast<std::size_t>(m);
    if (x.size() <= mm + 1) throw DegenerateInput("sample entropy needs more than m + 1 samples");
    const std::size_t templates = x.size() - mm;

    // Sorting by the first coordinate bounds the candidate set: for x[j] >= x[i]
    // the rounded difference x[j] - x[i] is monotone in x[j] and equals
    // |x[i] - x[j]|, so the scan stops at the first exceedance without
    // changing any comparison the double loop would make.
    std::vector<std::uint32_t> order(templates);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return x[a] < x[b] || (x[a] == x[b] && a < b);
    });

    SampEnResult res;
    res.tolerance = r;
    for (std::size_t p = 0; p < templates; ++p) {
        const std::size_t i = order[p];
        const double xi = x[i];
        for (std::size_t q = p + 1; q < templates; ++q) {
            const std::size_t j = order[q];
            if (x[j] - xi > r) break;
            bool match = true;
            for (std::size_t k = 1; k < mm; ++k) {
                if (std::fabs(x[i + k] - x[j + k]) > r) {
                    match = false;
                    break;
                }
            }
            if (!match) continue;
            ++res.b;
            if (std::fabs(x[i + mm] - x[j + mm]) <= r) ++res.a;
        }
    }
    res.value = res.finite() ? -std::log(static_cast<double>(res.a) / static_cast<double>(res.b))
                             : std::numeric_limits<double>::infinity();
    return res;
}

SampEnResult sample_entropy(std::span<const double> x, const SampEnParams& params)
{
    if (x.size() <= static_cast<std::size_t>(params.m) + 1)
        throw DegenerateInput("sample entropy needs more than m + 1 samples");
    const double sd = std::sqrt(population_variance(x));
    if (!(sd > 0.0)) throw DegenerateInput("sample entropy of a constant series");
    return sample_entropy(x, params.m, params.r_factor * sd);
}

// ---------------------------------------------------------------------------

HiguchiResult higuchi_fd(std::span<const double> x, int kmax)
{
    if (kmax < 2) throw DegenerateInput("Higuchi needs kmax >= 2");
    const std::size_t n = x.size();
    if (n < 10 * static_cast<std::size_t>(kmax)) throw DegenerateInput("series too short for Higuchi kmax");
    if (is_constant(x)) throw DegenerateInput("Higuchi dimension of a constant series");

    std::vector<double> log_inv_k, log_len;
    for (int k = 1; k <= kmax; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        double lk = 0.0;
        for (std::size_t m0 = 0; m0 < ks; ++m0) {
            const std::size_t steps = (n - 1 - m0) / ks;
            double sum = 0.0;
            for (std::size_t i = 1; i <= steps; ++i) sum += std::fabs(x[m0 + i * ks] - x[m0 + (i - 1) * ks]);
            lk += sum * static_cast<double>(n - 1) / (static_cast<double>(steps) * k) / k;
        }
        lk /= k;
        if (!(lk > 0.0)) throw DegenerateInput("Higuchi curve length vanished at k = " + std::to_string(k));
        log_inv_k.push_back(-std::log(static_cast<double>(k)));
        log_len.push_back(std::log(lk));
    }
    HiguchiResult res;
    res.raw_slope = ls_slope(log_inv_k, log_len);
    res.value = std::clamp(res.raw_slope, 1.0, 2.0);
    res.clamped = res.value != res.raw_slope;
    return res;
}

// ---------------------------------------------------------------------------

MFDProfile mfd_profile(std::span<const double> x, int max_scale)
{
    if (max_scale < 2) throw DegenerateInput("MFD needs at least two scales");
    const std::size_t n = x.size();
    const std::size_t scales = static_cast<std::size_t>(max_scale);
    if (n < 4 * scales) throw DegenerateInput("series too short for MFD scale count");

    std::vector<double> dil(x.begin(), x.end()), ero(x.begin(), x.end());
    std::vector<double> next(n);
    MFDProfile p;
    p.cover_area.resize(scales);
    for (std::size_t s = 0; s < scales; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            double v = dil[i];
            if (i > 0) v = std::max(v, dil[i - 1]);
            if (i + 1 < n) v = std::max(v, dil[i + 1]);
            next[i] = v;
        }
        dil.swap(next);
        for (std::size_t i = 0; i < n; ++i) {
            double v = ero[i];
            if (i > 0) v = std::min(v, ero[i - 1]);
            if (i + 1 < n) v = std::min(v, ero[i + 1]);
            next[i] = v;
        }
        ero.swap(next);
        double area = 0.0;
        for (std::size_t i = 0; i < n; ++i) area += dil[i] - ero[i];
        if (!(area > 0.0)) throw DegenerateInput("MFD cover area vanished (constant series)");
        p.cover_area[s] = area;
    }

    std::vector<double> log_s(scales), log_a(scales);
    for (std::size_t s = 0; s < scales; ++s) {
        log_s[s] = std::log(static_cast<double>(s + 1));
        log_a[s] = std::log(p.cover_area[s]);
    }
    const std::size_t width = std::min<std::size_t>(3, scales);
    p.scales.resize(scales);
    p.local_fd.resize(scales);
    for (std::size_t s = 0; s < scales; ++s) {
        std::size_t lo = s == 0 ? 0 : s - 1;
        lo = std::min(lo, scales - width);
        const double slope = ls_slope(std::span(log_s).subspan(lo, width), std::span(log_a).subspan(lo, width));
        const double fd = 2.0 - slope;
        p.scales[s] = static_cast<int>(s + 1);
        p.local_fd[s] = std::clamp(fd, 1.0, 2.0);
        if (p.local_fd[s] != fd) ++p.clamped;
    }
    return p;
}

MFDSummary mfd_summaries(const MFDProfile& p)
{
    if (p.local_fd.empty()) throw DegenerateInput("empty MFD profile");
    MFDSummary s;
    const auto& v = p.local_fd;
    s.fd1 = v.front();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    s.min = *lo;
    s.max = *hi;
    s.mean = mean_of(v);
    s.std = std::sqrt(population_variance(v));
    return s;
}

// ---------------------------------------------------------------------------

PoincareResult poincare(std::span<const double> x)
{
    if (x.size() < 2) throw DegenerateInput("Poincare plot needs at least two intervals");
    std::vector<double> d(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
    const double var_d = population_variance(d);
    const double var_x = population_variance(x);
    PoincareResult r;
    r.sd1 = std::sqrt(var_d / 2.0);
    const double rad = 2.0 * var_x - var_d / 2.0;
    r.sd2_clamped = rad < 0.0;
    r.sd2 = std::sqrt(std::max(rad, 0.0));
    return r;
}

}  // namespace phenosig
