#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ppgbench/segment.hpp"

namespace ppgbench {

// Two-Gaussian pulse: systolic bump plus a delayed dicrotic bump, both
// expressed in beat phase so the waveform time-scales with the interval.
// Defaults keep the dicrotic bump a distinct local maximum.
struct BeatMorphology {
    double systolic_amp = 1.0;
    double dicrotic_amp = 0.3;
    double systolic_width = 0.07;  // phase units
    double dicrotic_width = 0.09;
    double dicrotic_delay = 0.3;  // phase offset from the systolic peak
};

struct SynthParams {
    RhythmCode rhythm = RhythmCode::SR;  // SR, STACH, SBRAD, AF, SARRH
    double hr_bpm = 80.0;
    double rr_bpm = 18.0;
    double sbp_mmhg = 120.0;
    double dbp_mmhg = 80.0;
    double noise_std = 0.0;  // fraction of beat amplitude
    double duration_s = 30.0;
    double sampling_rate_hz = 125.0;
    std::uint64_t seed = 0;
    BeatMorphology morphology;
};

struct GroundTruth {
    double hr_bpm = 0.0;
    double rr_bpm = 0.0;
    double sbp_mmhg = 0.0;
    double dbp_mmhg = 0.0;
    RhythmCode rhythm = RhythmCode::SR;
};

// Throws ValidationError when params break a rhythm/HR consistency rule
// (STACH needs hr > 100, SBRAD hr < 60, SR 60..100) or a range sign.
void validate_synth_params(const SynthParams& params);

double beat_template(double phase, const BeatMorphology& morphology);

// onsets_out, when given, receives the generated beat onset times (seconds,
// first one before 0, last one past the duration) for interval diagnostics.
std::pair<PpgSegment, GroundTruth> generate_segment(const SynthParams& params,
                                                    std::vector<double>* onsets_out = nullptr);

struct ParamRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct ClassSpec {
    RhythmCode rhythm = RhythmCode::SR;
    int count = 0;
    ParamRange hr_bpm;    // defaults per rhythm, see default_hr_range
    ParamRange rr_bpm{15.7, 24.8};
    ParamRange sbp_mmhg{105.6, 139.6};
    ParamRange dbp_mmhg{60.0, 85.0};
};

struct SynthSpec {
    std::vector<ClassSpec> classes;
    double noise_std = 0.1;
    double duration_s = 30.0;
    double sampling_rate_hz = 125.0;
    int segments_per_subject = 4;
    bool demographics = true;
    std::uint64_t seed = 0;
};

ParamRange default_hr_range(RhythmCode rhythm);

// Segments grouped into synthetic subjects, subjects dealt round-robin over
// folds 1..10. Deterministic in the master seed via per-segment seed
// splitting, so generation order never matters.
Dataset generate_dataset(const SynthSpec& spec);

SynthSpec load_synth_spec(const std::filesystem::path& json_path);

}  // namespace ppgbench
