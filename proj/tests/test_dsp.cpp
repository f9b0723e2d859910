#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "ppgbench/dsp.hpp"
#include "ppgbench/errors.hpp"

using namespace ppgbench;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sinusoid(double freq_hz, double fs, double duration_s, double amplitude = 1.0) {
    const auto n = static_cast<std::size_t>(duration_s * fs);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = amplitude * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / fs);
    return x;
}

double rms(const std::vector<double>& x, std::size_t begin = 0) {
    double acc = 0.0;
    for (std::size_t i = begin; i < x.size(); ++i) acc += x[i] * x[i];
    return std::sqrt(acc / static_cast<double>(x.size() - begin));
}

// Steady-state single-pass gain measured by probing with a unit sinusoid and
// discarding the leading transient.
double single_pass_gain(const FilterCoefficients& coeffs, double freq_hz, double fs) {
    const double duration = 60.0;
    const std::vector<double> x = sinusoid(freq_hz, fs, duration);
    const std::vector<double> y = lfilter(coeffs, x);
    const auto skip = static_cast<std::size_t>(x.size() / 2);
    return rms(y, skip) / rms(x, skip);
}

double magnitude_response(const FilterCoefficients& coeffs, double omega) {
    std::complex<double> num(0.0, 0.0), den(0.0, 0.0);
    for (std::size_t k = 0; k < coeffs.numerator.size(); ++k)
        num += coeffs.numerator[k] * std::exp(std::complex<double>(0.0, -omega * static_cast<double>(k)));
    for (std::size_t k = 0; k < coeffs.denominator.size(); ++k)
        den += coeffs.denominator[k] * std::exp(std::complex<double>(0.0, -omega * static_cast<double>(k)));
    return std::abs(num / den);
}

// Amplitude of the freq_hz component by quadrature projection.
double component_amplitude(const std::vector<double>& x, double freq_hz, double fs) {
    double cs = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / fs;
        cs += x[i] * std::cos(2.0 * kPi * freq_hz * t);
        sn += x[i] * std::sin(2.0 * kPi * freq_hz * t);
    }
    const double n = static_cast<double>(x.size());
    return 2.0 * std::hypot(cs, sn) / n;
}

}  // namespace

TEST_CASE("0.5-8 Hz order-3 design satisfies the coefficient invariants") {
    const FilterCoefficients c = design_bandpass(0.5, 8.0, 125.0, 3);
    CHECK(c.numerator.size() == 7);
    CHECK(c.denominator.size() == 7);
    CHECK(c.denominator[0] == doctest::Approx(1.0).epsilon(1e-15));

    double sum_b = 0.0;
    for (double v : c.numerator) sum_b += v;
    CHECK(std::abs(sum_b) < 1e-9);

    CHECK(all_roots_inside_unit_circle(c.denominator));
    for (double v : c.numerator) CHECK(std::isfinite(v));
    for (double v : c.denominator) CHECK(std::isfinite(v));
}

TEST_CASE("band edge validation") {
    CHECK_THROWS_AS(design_bandpass(0.5, 70.0, 125.0, 3), ValidationError);   // >= Nyquist
    CHECK_THROWS_AS(design_bandpass(8.0, 0.5, 125.0, 3), ValidationError);    // inverted
    CHECK_THROWS_AS(design_bandpass(-1.0, 8.0, 125.0, 3), ValidationError);   // non-positive
    CHECK_THROWS_AS(design_bandpass(0.5, 8.0, 125.0, 0), ValidationError);    // order
}

TEST_CASE("single-pass sinusoid gains: passband >= 0.95, stopbands <= 0.05") {
    const FilterCoefficients c = design_bandpass(0.5, 8.0, 125.0, 3);
    CHECK(single_pass_gain(c, 2.0, 125.0) >= 0.95);
    CHECK(single_pass_gain(c, 0.05, 125.0) <= 0.05);
    CHECK(single_pass_gain(c, 30.0, 125.0) <= 0.05);
}

TEST_CASE("magnitude response is monotone toward the stop-bands (no ripple)") {
    const FilterCoefficients c = design_bandpass(0.5, 8.0, 125.0, 3);
    std::vector<double> mag(512);
    for (int i = 0; i < 512; ++i) mag[i] = magnitude_response(c, kPi * (i + 0.5) / 512.0);
    const auto peak = static_cast<std::size_t>(
        std::max_element(mag.begin(), mag.end()) - mag.begin());
    for (std::size_t i = 1; i <= peak; ++i) CHECK(mag[i] >= mag[i - 1] - 1e-9);
    for (std::size_t i = peak + 1; i < mag.size(); ++i) CHECK(mag[i] <= mag[i - 1] + 1e-9);
}

TEST_CASE("filtfilt rejects DC: constant 5.0 in, almost nothing out") {
    const FilterCoefficients c = design_bandpass(0.5, 8.0, 125.0, 3);
    std::vector<double> x(500, 5.0);
    const std::vector<double> y = filtfilt(c, x);
    REQUIRE(y.size() == x.size());
    double max_abs = 0.0;
    for (double v : y) max_abs = std::max(max_abs, std::abs(v));
    CHECK(max_abs < 0.05);
}

TEST_CASE("filtfilt keeps a band-interior sinusoid with zero phase shift") {
    const FilterCoefficients c = design_bandpass(0.5, 8.0, 125.0, 3);
    const std::vector<double> x = sinusoid(2.0, 125.0, 30.0);
    const std::vector<double> y = filtfilt(c, x);
    REQUIRE(y.size() == x.size());

    // steady-state gain; the 0.5 Hz poles ring for over a second at the ends
    auto interior_rms = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (std::size_t i = 1000; i + 1000 < v.size(); ++i) acc += v[i] * v[i];
        return std::sqrt(acc / static_cast<double>(v.size() - 2000));
    };
    // 2 Hz is the geometric band center sqrt(0.5 * 8), where the gain is
    // exactly 1; leave room for measurement noise on the upper side
    const double ratio = interior_rms(y) / interior_rms(x);
    CHECK(ratio >= 0.90);
    CHECK(ratio <= 1.0 + 1e-6);

    // cross-correlation peaks at lag 0
    auto xcorr = [&](int lag) {
        double acc = 0.0;
        for (std::size_t i = 100; i + 100 < x.size(); ++i)
            acc += y[i] * x[static_cast<std::size_t>(static_cast<int>(i) + lag)];
        return acc;
    };
    const double at0 = xcorr(0);
    for (int lag = -8; lag <= 8; ++lag) {
        if (lag != 0) CHECK(at0 > xcorr(lag));
    }
}

TEST_CASE("filtfilt of zero is zero, and too-short signals are rejected") {
    const FilterCoefficients c = design_bandpass(0.5, 8.0, 125.0, 3);
    std::vector<double> zeros(200, 0.0);
    const std::vector<double> y = filtfilt(c, zeros);
    for (double v : y) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    std::vector<double> tiny(21, 1.0);
    CHECK_THROWS_AS(filtfilt(c, tiny), ValidationError);
}

TEST_CASE("filtfilt commutes with time reversal away from the edge transients") {
    std::mt19937 rng(5);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> x(3750);
    for (double& v : x) v = dist(rng);
    const FilterCoefficients c = design_bandpass(0.5, 8.0, 125.0, 3);

    const std::vector<double> y = filtfilt(c, x);
    std::vector<double> xr(x.rbegin(), x.rend());
    std::vector<double> yr = filtfilt(c, xr);
    std::reverse(yr.begin(), yr.end());
    // the two orders differ only by startup transients, which decay with the
    // slowest pole (~1.5 s here); compare where they have died out
    double max_diff = 0.0;
    for (std::size_t i = 1200; i + 1200 < y.size(); ++i)
        max_diff = std::max(max_diff, std::abs(y[i] - yr[i]));
    CHECK(max_diff < 1e-4);
}

TEST_CASE("clean removes injected baseline wander") {
    const double fs = 125.0;
    PpgSegment seg;
    seg.segment_id = "wander";
    seg.subject_id = "s";
    seg.fold = 1;
    seg.sampling_rate_hz = fs;
    const std::vector<double> carrier = sinusoid(2.0, fs, 40.0);
    seg.samples.resize(carrier.size());
    for (std::size_t i = 0; i < carrier.size(); ++i) {
        const double t = static_cast<double>(i) / fs;
        seg.samples[i] = static_cast<float>(carrier[i] + 10.0 * std::sin(2.0 * kPi * 0.05 * t));
    }

    std::vector<double> before(seg.samples.begin(), seg.samples.end());
    CHECK(component_amplitude(before, 0.05, fs) > 9.0);

    const PpgSegment cleaned = clean(seg);
    std::vector<double> after(cleaned.samples.begin(), cleaned.samples.end());
    CHECK(component_amplitude(after, 0.05, fs) < 0.5);
    CHECK(cleaned.segment_id == seg.segment_id);
    CHECK(cleaned.sampling_rate_hz == seg.sampling_rate_hz);
}

TEST_CASE("clean preserves an already-clean band-interior probe and is idempotent") {
    PpgSegment seg;
    seg.segment_id = "probe";
    seg.subject_id = "s";
    seg.fold = 1;
    seg.sampling_rate_hz = 125.0;
    const std::vector<double> x = sinusoid(2.0, 125.0, 30.0);
    seg.samples.assign(x.begin(), x.end());

    const PpgSegment once = clean(seg);
    std::vector<double> y1(once.samples.begin(), once.samples.end());
    CHECK(rms(y1) == doctest::Approx(rms(x)).epsilon(0.10));

    const PpgSegment twice = clean(once);
    std::vector<double> y2(twice.samples.begin(), twice.samples.end());
    double diff = 0.0;
    for (std::size_t i = 0; i < y1.size(); ++i) diff += (y2[i] - y1[i]) * (y2[i] - y1[i]);
    diff = std::sqrt(diff / static_cast<double>(y1.size()));
    CHECK(diff <= 0.1 * rms(y1));
}

TEST_CASE("clean designs the filter at the segment's own sampling rate") {
    PpgSegment seg;
    seg.segment_id = "rate100";
    seg.subject_id = "s";
    seg.fold = 1;
    seg.sampling_rate_hz = 100.0;
    const std::vector<double> x = sinusoid(2.0, 100.0, 20.0);
    seg.samples.assign(x.begin(), x.end());

    const PpgSegment cleaned = clean(seg);
    const FilterCoefficients c100 = design_bandpass(0.5, 8.0, 100.0, 3);
    const std::vector<double> expected = filtfilt(c100, std::vector<double>(x.begin(), x.end()));
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(cleaned.samples[i] == doctest::Approx(static_cast<float>(expected[i])).epsilon(1e-6));
}

TEST_CASE("resample_linear identity, decimation, and ramp invariance") {
    const std::vector<double> x = {0.0, 1.0, 2.0, 3.0};
    CHECK(resample_linear(x, 2.0, 2.0) == x);

    const std::vector<double> half = resample_linear(x, 2.0, 1.0);
    REQUIRE(half.size() == 2);
    CHECK(half[0] == doctest::Approx(0.0));
    CHECK(half[1] == doctest::Approx(2.0));

    std::vector<double> ramp(200);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.5 * static_cast<double>(i);
    const std::vector<double> up = resample_linear(ramp, 100.0, 125.0);
    REQUIRE(up.size() == 250);
    for (std::size_t k = 0; k + 1 < up.size(); ++k) {
        const double t = static_cast<double>(k) / 125.0;
        if (t <= 199.0 / 100.0) CHECK(up[k] == doctest::Approx(0.5 * t * 100.0).epsilon(1e-9));
    }

    CHECK_THROWS_AS(resample_linear({1.0}, 2.0, 1.0), ValidationError);
    CHECK_THROWS_AS(resample_linear(x, 0.0, 1.0), ValidationError);
}

TEST_CASE("design invariants hold across a grid of valid designs") {
    for (double low : {0.3, 0.5, 1.0}) {
        for (double high : {6.0, 8.0, 12.0}) {
            for (int order : {1, 2, 3, 4}) {
                const FilterCoefficients c = design_bandpass(low, high, 125.0, order);
                double sum_b = 0.0;
                for (double v : c.numerator) sum_b += v;
                CHECK(std::abs(sum_b) < 1e-9);
                CHECK(all_roots_inside_unit_circle(c.denominator));
                CHECK(c.denominator[0] == doctest::Approx(1.0).epsilon(1e-14));
            }
        }
    }
}
