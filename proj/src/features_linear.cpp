#include "phenosig/features_linear.hpp"

#include <cmath>
#include <numbers>

namespace phenosig {

double short_time_energy(const MotionWindow& window, double min_fraction)
{
    if (!window.is_valid(min_fraction)) {
        throw DegenerateInput("motion window at " + std::to_string(window.window_start_ms) + " has " +
                              std::to_string(window.samples.size()) + " of " +
                              std::to_string(window.expected_count) + " expected samples");
    }
    double sum = 0.0;
    for (const RawSample& s : window.samples) sum += s.x * s.x + s.y * s.y + s.z * s.z;
    return sum / static_cast<double>(window.samples.size());
}

FrequencyGrid make_grid(double span_seconds, const LombScargleParams& params)
{
    if (!(span_seconds > 0.0) || !(params.oversampling > 0.0) || !(params.f_max_hz > params.f_min_hz))
        throw DegenerateInput("invalid Lomb-Scargle grid parameters");
    FrequencyGrid g;
    g.start_hz = params.f_min_hz;
    g.step_hz = 1.0 / (params.oversampling * span_seconds);
    g.count = static_cast<std::size_t>(std::floor((params.f_max_hz - params.f_min_hz) / g.step_hz + 1e-9)) + 1;
    return g;
}

Periodogram lomb_scargle(std::span<const double> times_s, std::span<const double> values, const FrequencyGrid& grid)
{
    const std::size_t n = times_s.size();
    if (n != values.size()) throw DegenerateInput("times and values differ in length");
    if (n < 3) throw DegenerateInput("Lomb-Scargle needs at least three samples");

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> y(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = values[j] - mean;
        var += y[j] * y[j];
    }
    var /= static_cast<double>(n - 1);
    if (!(var > 0.0)) throw DegenerateInput("Lomb-Scargle of a constant series");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    // cos/sin at the current frequency advance by a per-sample rotation;
    // they are recomputed exactly every kReseed steps to bound drift.
    constexpr std::size_t kReseed = 64;
    std::vector<double> c(n), s(n), cd(n), sd(n);
    for (std::size_t j = 0; j < n; ++j) {
        cd[j] = std::cos(two_pi * grid.step_hz * times_s[j]);
        sd[j] = std::sin(two_pi * grid.step_hz * times_s[j]);
    }

    Periodogram out;
    out.freq_hz.resize(grid.count);
    out.power.resize(grid.count);
    const double nd = static_cast<double>(n);
    const double* tp = times_s.data();
    double* cp = c.data();
    double* sp = s.data();
    const double* cdp = cd.data();
    const double* sdp = sd.data();
    const double* yp = y.data();

    for (std::size_t k = 0; k < grid.count; ++k) {
        const double f = grid.at(k);
        if (k % kReseed == 0) {
            for (std::size_t j = 0; j < n; ++j) {
                cp[j] = std::cos(two_pi * f * tp[j]);
                sp[j] = std::sin(two_pi * f * tp[j]);
            }
        }
        double yc = 0.0, ys = 0.0, cc = 0.0, cs = 0.0;
#pragma omp simd reduction(+ : yc, ys, cc, cs)
        for (std::size_t j = 0; j < n; ++j) {
            yc += yp[j] * cp[j];
            ys += yp[j] * sp[j];
            cc += cp[j] * cp[j];
            cs += cp[j] * sp[j];
        }
        const double ss = nd - cc;

        // time offset tau: tan(2 w tau) = sum sin(2wt) / sum cos(2wt)
        const double half = 0.5 * std::atan2(2.0 * cs, cc - ss);
        const double ct = std::cos(half);
        const double st = std::sin(half);
        const double yct = ct * yc + st * ys;
        const double yst = ct * ys - st * yc;
        const double cct = ct * ct * cc + 2.0 * ct * st * cs + st * st * ss;
        const double sst = nd - cct;
        double p = 0.0;
        if (cct > 1e-12 * nd) p += yct * yct / cct;
        if (sst > 1e-12 * nd) p += yst * yst / sst;
        out.freq_hz[k] = f;
        out.power[k] = p / (2.0 * var);

#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) {
            const double cn = cp[j] * cdp[j] - sp[j] * sdp[j];
            sp[j] = sp[j] * cdp[j] + cp[j] * sdp[j];
            cp[j] = cn;
        }
    }
    return out;
}

Periodogram lomb_scargle(const RRSeries& rr, const LombScargleParams& params)
{
    const double span = static_cast<double>(rr.window_end_ms - rr.window_start_ms) / 1000.0;
    return lomb_scargle(rr.beat_times, rr.intervals, make_grid(span, params));
}

namespace {

double trapezoid(const Periodogram& p, double lo, double hi)
{
    double area = 0.0;
    bool have_prev = false;
    double pf = 0.0, pp = 0.0;
    for (std::size_t k = 0; k < p.freq_hz.size(); ++k) {
        const double f = p.freq_hz[k];
        if (f < lo || f > hi) continue;
        if (have_prev) area += 0.5 * (p.power[k] + pp) * (f - pf);
        pf = f;
        pp = p.power[k];
        have_prev = true;
    }
    return area;
}

}  // namespace

BandPowers band_powers(const Periodogram& p)
{
    BandPowers b;
    if (p.freq_hz.size() < 2) throw DegenerateInput("periodogram too short for band integration");
    b.lf = trapezoid(p, kLfLowHz, kLfHighHz);
    b.hf = trapezoid(p, kHfLowHz, kHfHighHz);
    b.total = trapezoid(p, p.freq_hz.front(), p.freq_hz.back());
    if (b.total > 0.0) {
        b.lf_rel = b.lf / b.total;
        b.hf_rel = b.hf / b.total;
    }
    const double lfhf = b.lf + b.hf;
    if (lfhf > 0.0) {
        b.lf_norm = b.lf / lfhf;
        b.hf_norm = b.hf / lfhf;
    }
    b.lf_hf_ratio = b.hf > 0.0 ? b.lf / b.hf : std::nan("");
    return b;
}

}  // namespace phenosig
