#pragma once

#include <vector>

#include "ppgbench/segment.hpp"

namespace ppgbench {

struct BandpassDesign {
    double low_hz = 0.0;
    double high_hz = 0.0;
    int order = 0;  // analog prototype order per band edge; digital order is 2x
    double sampling_rate_hz = 0.0;

    bool operator==(const BandpassDesign&) const = default;
};

struct FilterCoefficients {
    std::vector<double> numerator;    // b, len 2*order+1
    std::vector<double> denominator;  // a, a[0] == 1
    BandpassDesign design;
};

// Butterworth band-pass from the analog prototype poles through the
// frequency-prewarped bilinear transform. Numerator sums to zero (DC zero)
// and all poles lie strictly inside the unit circle.
FilterCoefficients design_bandpass(double low_hz, double high_hz, double sampling_rate_hz, int order);

// Single forward pass (direct form II transposed), zero initial state.
std::vector<double> lfilter(const FilterCoefficients& coeffs, const std::vector<double>& signal);

// Forward-backward zero-phase application with odd-reflection edge padding
// of length 3*(max(len(b),len(a))-1) and steady-state initial conditions.
std::vector<double> filtfilt(const FilterCoefficients& coeffs, const std::vector<double>& signal);

// The cleaning step: 0.5-8 Hz 3rd-order band-pass designed at the segment's
// own sampling rate, applied zero-phase. Metadata untouched.
PpgSegment clean(const PpgSegment& segment);

// Linear interpolation onto a uniform grid of round(len*fs_out/fs_in)
// samples starting at t=0 with spacing 1/fs_out.
std::vector<double> resample_linear(const std::vector<double>& signal, double fs_in, double fs_out);

// Schur-Cohn recursion; true iff all roots of the polynomial are strictly
// inside the unit circle.
bool all_roots_inside_unit_circle(const std::vector<double>& poly);

}  // namespace ppgbench
