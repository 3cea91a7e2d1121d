#pragma once

// Motion energy and Lomb-Scargle band powers of HRV.

#include <span>
#include <stdexcept>
#include <vector>

#include "phenosig/data_model.hpp"

namespace phenosig {

/// Thrown by feature extractors when the input cannot define the feature
/// (zero variance, too short, invalid window).
class DegenerateInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mean over samples of x^2 + y^2 + z^2. Throws DegenerateInput when the
/// window holds fewer than `min_fraction` of its expected samples.
double short_time_energy(const MotionWindow& window, double min_fraction = 0.9);

/// Uniform grid f_k = start_hz + k * step_hz, k = 0..count-1.
struct FrequencyGrid {
    double start_hz = 0.0;
    double step_hz = 0.0;
    std::size_t count = 0;

    double at(std::size_t k) const { return start_hz + static_cast<double>(k) * step_hz; }
};

struct LombScargleParams {
    double f_min_hz = 0.003;
    double f_max_hz = 0.40;
    double oversampling = 4.0;
};

/// Grid covering [f_min, f_max] with spacing 1/(oversampling * span_s).
FrequencyGrid make_grid(double span_seconds, const LombScargleParams& params = {});

struct Periodogram {
    std::vector<double> freq_hz;
    std::vector<double> power;
};

/// Classic normalized Lomb periodogram of `values` sampled at `times_s`:
/// the mean is removed and power is normalized by twice the sample variance
/// (N - 1 denominator). Throws DegenerateInput for zero variance or fewer
/// than three samples.
Periodogram lomb_scargle(std::span<const double> times_s, std::span<const double> values, const FrequencyGrid& grid);

/// Periodogram of the interval series against beat times, on the default
/// grid for the series' window.
Periodogram lomb_scargle(const RRSeries& rr, const LombScargleParams& params = {});

struct BandPowers {
    double lf = 0.0;  // integrated power, 0.04-0.15 Hz
    double hf = 0.0;  // integrated power, 0.15-0.40 Hz
    double total = 0.0;
    double lf_rel = 0.0;
    double hf_rel = 0.0;
    double lf_norm = 0.0;
    double hf_norm = 0.0;
    double lf_hf_ratio = 0.0;  // NaN when hf == 0
};

inline constexpr double kLfLowHz = 0.04;
inline constexpr double kLfHighHz = 0.15;
inline constexpr double kHfLowHz = 0.15;
inline constexpr double kHfHighHz = 0.40;

/// Trapezoidal band integration. Relative powers divide by the integral over
/// the whole grid, normalized powers by LF + HF.
BandPowers band_powers(const Periodogram& p);

}  // namespace phenosig
