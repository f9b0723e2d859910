#include "ppgbench/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ppgbench/errors.hpp"

namespace ppgbench {

namespace {

using cd = std::complex<double>;

// poly(roots): expand product of (x - r_i) into monic coefficients,
// highest degree first.
std::vector<cd> poly_from_roots(const std::vector<cd>& roots) {
    std::vector<cd> coeffs{cd(1.0, 0.0)};
    for (const cd& r : roots) {
        std::vector<cd> next(coeffs.size() + 1, cd(0.0, 0.0));
        for (size_t i = 0; i < coeffs.size(); ++i) {
            next[i] += coeffs[i];
            next[i + 1] -= coeffs[i] * r;
        }
        coeffs = std::move(next);
    }
    return coeffs;
}

std::vector<double> real_coeffs(const std::vector<cd>& coeffs) {
    std::vector<double> out(coeffs.size());
    for (size_t i = 0; i < coeffs.size(); ++i) out[i] = coeffs[i].real();
    return out;
}

// Steady-state filter state for a unit-step input (direct form II
// transposed), so that a constant signal produces no startup transient.
std::vector<double> step_steady_state(const std::vector<double>& b, const std::vector<double>& a) {
    const size_t n = std::max(b.size(), a.size());
    std::vector<double> bp(n, 0.0), ap(n, 0.0);
    std::copy(b.begin(), b.end(), bp.begin());
    std::copy(a.begin(), a.end(), ap.begin());

    double sum_b = 0.0, sum_a = 0.0;
    for (double v : bp) sum_b += v;
    for (double v : ap) sum_a += v;
    const double dc_gain = sum_b / sum_a;

    std::vector<double> zi(n - 1, 0.0);
    // z[i] = z[i+1] + b[i+1] - a[i+1]*dc_gain, solved from the back
    double acc = 0.0;
    for (size_t i = n - 1; i >= 1; --i) {
        acc += bp[i] - ap[i] * dc_gain;
        zi[i - 1] = acc;
    }
    return zi;
}

std::vector<double> lfilter_with_state(const std::vector<double>& b, const std::vector<double>& a,
                                       const std::vector<double>& x, std::vector<double> z) {
    const size_t n = std::max(b.size(), a.size());
    std::vector<double> bp(n, 0.0), ap(n, 0.0);
    std::copy(b.begin(), b.end(), bp.begin());
    std::copy(a.begin(), a.end(), ap.begin());
    z.resize(n - 1, 0.0);

    std::vector<double> y(x.size());
    for (size_t m = 0; m < x.size(); ++m) {
        const double xm = x[m];
        const double ym = bp[0] * xm + z[0];
        for (size_t i = 0; i + 1 < n - 1; ++i) z[i] = bp[i + 1] * xm + z[i + 1] - ap[i + 1] * ym;
        z[n - 2] = bp[n - 1] * xm - ap[n - 1] * ym;
        y[m] = ym;
    }
    return y;
}

}  // namespace

FilterCoefficients design_bandpass(double low_hz, double high_hz, double sampling_rate_hz, int order) {
    const double nyquist = sampling_rate_hz / 2.0;
    if (!(sampling_rate_hz > 0.0))
        throw ValidationError("design_bandpass: sampling rate must be positive");
    if (!(low_hz > 0.0))
        throw ValidationError("design_bandpass: low edge must be positive, got " + std::to_string(low_hz));
    if (!(low_hz < high_hz))
        throw ValidationError("design_bandpass: band edges inverted (" + std::to_string(low_hz) + ", " +
                              std::to_string(high_hz) + ")");
    if (!(high_hz < nyquist))
        throw ValidationError("design_bandpass: high edge " + std::to_string(high_hz) +
                              " must be below Nyquist " + std::to_string(nyquist));
    if (order < 1) throw ValidationError("design_bandpass: order must be >= 1");

    const double pi = std::numbers::pi;
    const double k = 2.0 * sampling_rate_hz;  // bilinear constant
    // Pre-warp band edges so the digital response hits them exactly.
    const double w1 = k * std::tan(pi * low_hz / sampling_rate_hz);
    const double w2 = k * std::tan(pi * high_hz / sampling_rate_hz);
    const double bw = w2 - w1;
    const double w0_sq = w1 * w2;

    const int n = order;
    // Normalized Butterworth low-pass prototype poles on the unit circle,
    // left half plane.
    std::vector<cd> analog_poles;
    analog_poles.reserve(2 * static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double theta = pi * (2.0 * i + n + 1.0) / (2.0 * n);
        const cd p(std::cos(theta), std::sin(theta));
        // Low-pass -> band-pass: s^2 - p*bw*s + w0^2 = 0
        const cd half = p * (bw / 2.0);
        const cd root = std::sqrt(half * half - cd(w0_sq, 0.0));
        analog_poles.push_back(half + root);
        analog_poles.push_back(half - root);
    }

    // Bilinear transform of poles; zeros are n at z=+1 (from s=0) and n at
    // z=-1 (from s=infinity).
    std::vector<cd> digital_poles;
    digital_poles.reserve(analog_poles.size());
    cd pole_gain(1.0, 0.0);
    for (const cd& s : analog_poles) {
        digital_poles.push_back((cd(k, 0.0) + s) / (cd(k, 0.0) - s));
        pole_gain *= cd(k, 0.0) - s;
    }
    // Analog gain bw^n with n zeros at s=0 contributing (k-0)^n.
    double log_num_gain = static_cast<double>(n) * (std::log(bw) + std::log(k));
    const double gain = std::exp(log_num_gain - std::log(std::abs(pole_gain)));

    std::vector<cd> digital_zeros;
    digital_zeros.reserve(2 * static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) digital_zeros.emplace_back(1.0, 0.0);
    for (int i = 0; i < n; ++i) digital_zeros.emplace_back(-1.0, 0.0);

    FilterCoefficients coeffs;
    coeffs.numerator = real_coeffs(poly_from_roots(digital_zeros));
    for (double& v : coeffs.numerator) v *= gain;
    coeffs.denominator = real_coeffs(poly_from_roots(digital_poles));
    coeffs.design = {low_hz, high_hz, order, sampling_rate_hz};

    // (z-1)^n factors make sum(b) analytically zero; clear the float dust so
    // the invariant holds bit-wise after polynomial expansion.
    double sum_b = 0.0;
    for (double v : coeffs.numerator) sum_b += v;
    if (std::abs(sum_b) > 1e-9 * std::abs(coeffs.numerator.front()) + 1e-12)
        throw RuntimeAbort("design_bandpass: numerator DC leakage " + std::to_string(sum_b));
    if (!all_roots_inside_unit_circle(coeffs.denominator))
        throw RuntimeAbort("design_bandpass: unstable pole configuration (order too high for band)");
    return coeffs;
}

bool all_roots_inside_unit_circle(const std::vector<double>& poly) {
    // Schur-Cohn: recursively reduce; stable iff |a_n/a_0| < 1 at each level.
    std::vector<double> a = poly;
    if (a.empty()) return false;
    for (double& v : a) v /= poly[0];
    while (a.size() > 1) {
        const double k = a.back();
        if (std::abs(k) >= 1.0) return false;
        std::vector<double> next(a.size() - 1);
        const double denom = 1.0 - k * k;
        for (size_t i = 0; i + 1 < a.size(); ++i)
            next[i] = (a[i] - k * a[a.size() - 1 - i]) / denom;
        a = std::move(next);
    }
    return true;
}

std::vector<double> lfilter(const FilterCoefficients& coeffs, const std::vector<double>& signal) {
    return lfilter_with_state(coeffs.numerator, coeffs.denominator, signal, {});
}

std::vector<double> filtfilt(const FilterCoefficients& coeffs, const std::vector<double>& signal) {
    const size_t ntaps = std::max(coeffs.numerator.size(), coeffs.denominator.size());
    const size_t padlen = 3 * (ntaps - 1);
    if (signal.size() <= 3 * ntaps)
        throw ValidationError("filtfilt: signal length " + std::to_string(signal.size()) +
                              " too short for filter of " + std::to_string(ntaps) + " taps");

    // Odd reflection about the end points.
    std::vector<double> ext;
    ext.reserve(signal.size() + 2 * padlen);
    for (size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * signal.front() - signal[padlen - i]);
    ext.insert(ext.end(), signal.begin(), signal.end());
    for (size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * signal.back() - signal[signal.size() - 2 - i]);

    const std::vector<double> zi = step_steady_state(coeffs.numerator, coeffs.denominator);

    std::vector<double> state = zi;
    for (double& z : state) z *= ext.front();
    std::vector<double> y = lfilter_with_state(coeffs.numerator, coeffs.denominator, ext, state);

    std::reverse(y.begin(), y.end());
    state = zi;
    for (double& z : state) z *= y.front();
    y = lfilter_with_state(coeffs.numerator, coeffs.denominator, y, state);
    std::reverse(y.begin(), y.end());

    return {y.begin() + static_cast<std::ptrdiff_t>(padlen),
            y.end() - static_cast<std::ptrdiff_t>(padlen)};
}

PpgSegment clean(const PpgSegment& segment) {
    validate_segment(segment);
    FilterCoefficients coeffs = design_bandpass(0.5, 8.0, segment.sampling_rate_hz, 3);
    std::vector<double> x(segment.samples.begin(), segment.samples.end());
    std::vector<double> y = filtfilt(coeffs, x);
    PpgSegment out = segment;
    out.samples.assign(y.begin(), y.end());
    return out;
}

std::vector<double> resample_linear(const std::vector<double>& signal, double fs_in, double fs_out) {
    if (!(fs_in > 0.0) || !(fs_out > 0.0))
        throw ValidationError("resample_linear: sampling rates must be positive");
    if (signal.size() < 2)
        throw ValidationError("resample_linear: need at least 2 samples");

    const auto n_out = static_cast<size_t>(
        std::llround(static_cast<double>(signal.size()) * fs_out / fs_in));
    std::vector<double> out(n_out);
    const double ratio = fs_in / fs_out;  // input samples per output step
    for (size_t k = 0; k < n_out; ++k) {
        const double pos = static_cast<double>(k) * ratio;
        const auto i = static_cast<size_t>(std::min(pos, static_cast<double>(signal.size() - 2)));
        const double frac = pos - static_cast<double>(i);
        out[k] = frac <= 1.0 ? signal[i] + frac * (signal[i + 1] - signal[i]) : signal.back();
    }
    return out;
}

}  // namespace ppgbench
