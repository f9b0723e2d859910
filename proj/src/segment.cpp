#include "ppgbench/segment.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "ppgbench/errors.hpp"

namespace ppgbench {

std::string_view to_string(Gender g) {
    return g == Gender::Female ? "female" : "male";
}

std::optional<Gender> parse_gender(std::string_view text) {
    if (text == "female") return Gender::Female;
    if (text == "male") return Gender::Male;
    return std::nullopt;
}

void validate_segment(const PpgSegment& segment) {
    if (segment.segment_id.empty())
        throw ValidationError("segment with empty segment_id");
    if (segment.samples.size() < 2)
        throw ValidationError("segment '" + segment.segment_id + "': needs at least 2 samples, has " +
                              std::to_string(segment.samples.size()));
    for (float v : segment.samples) {
        if (!std::isfinite(v))
            throw ValidationError("segment '" + segment.segment_id + "': non-finite sample value");
    }
    if (segment.fold < 1 || segment.fold > 10)
        throw ValidationError("segment '" + segment.segment_id + "': fold " + std::to_string(segment.fold) +
                              " outside 1..10");
    if (!(segment.sampling_rate_hz > 0.0) || !std::isfinite(segment.sampling_rate_hz))
        throw ValidationError("segment '" + segment.segment_id + "': sampling_rate_hz must be positive");
    if (segment.liu_code && (*segment.liu_code < 0 || *segment.liu_code > 5))
        throw ValidationError("segment '" + segment.segment_id + "': liu_code " +
                              std::to_string(*segment.liu_code) + " outside 0..5");
}

void validate_dataset(const Dataset& dataset) {
    std::unordered_set<std::string> ids;
    std::unordered_map<std::string, int> subject_fold;
    for (const PpgSegment& s : dataset.segments) {
        validate_segment(s);
        if (!ids.insert(s.segment_id).second)
            throw ValidationError("duplicate segment_id '" + s.segment_id + "'");
        auto [it, inserted] = subject_fold.emplace(s.subject_id, s.fold);
        if (!inserted && it->second != s.fold)
            throw ValidationError("subject '" + s.subject_id + "' appears in folds " +
                                  std::to_string(it->second) + " and " + std::to_string(s.fold));
    }
}

}  // namespace ppgbench
