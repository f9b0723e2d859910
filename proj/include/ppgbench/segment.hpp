#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ppgbench/rhythm.hpp"

namespace ppgbench {

enum class Gender { Female, Male };

std::string_view to_string(Gender g);
std::optional<Gender> parse_gender(std::string_view text);

// One PPG waveform segment plus everything ever attached to it.
// Samples are stored as binary32 (the on-disk unit); all processing
// arithmetic widens to double.
struct PpgSegment {
    std::string segment_id;
    std::string subject_id;
    int fold = 1;  // 1..10
    std::vector<float> samples;
    double sampling_rate_hz = 125.0;

    std::optional<RhythmCode> rhythm;
    std::optional<int> liu_code;  // external-dataset rhythm label, 0..5

    std::optional<double> hr_bpm;
    std::optional<double> rr_bpm;
    std::optional<double> sbp_mmhg;
    std::optional<double> dbp_mmhg;

    std::optional<double> age_years;
    std::optional<double> weight_kg;
    std::optional<double> height_cm;
    std::optional<Gender> gender;
    std::optional<std::string> ethnicity_raw;

    double duration_s() const { return static_cast<double>(samples.size()) / sampling_rate_hz; }

    bool operator==(const PpgSegment&) const = default;
};

struct Dataset {
    std::vector<PpgSegment> segments;
    std::string provenance = "imported";  // "synthetic" | "imported"

    bool operator==(const Dataset&) const = default;
};

// Throws ValidationError naming the offending segment on:
// short/non-finite samples, fold outside 1..10, duplicate segment ids,
// or a subject whose segments span multiple folds.
void validate_segment(const PpgSegment& segment);
void validate_dataset(const Dataset& dataset);

}  // namespace ppgbench
