#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ppgbench/segment.hpp"

namespace ppgbench {

enum class TaskKind { AF, SAA, ARRH, REG_HR, REG_RR, REG_BP };

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> parse_task_kind(std::string_view text);
bool is_classification(TaskKind kind);

struct TaskSpec {
    TaskKind kind;
    int output_dim;
    std::vector<std::string> output_names;
};

TaskSpec make_task_spec(TaskKind kind);

struct MappingOutcome {
    enum class Kind { Excluded, ZeroVector, Target };
    Kind kind = Kind::Excluded;
    std::vector<int> indices;  // non-empty iff kind == Target

    static MappingOutcome excluded() { return {Kind::Excluded, {}}; }
    static MappingOutcome zero() { return {Kind::ZeroVector, {}}; }
    static MappingOutcome target(int index) { return {Kind::Target, {index}}; }

    bool operator==(const MappingOutcome&) const = default;
};

// Rhythm-code to task-target mapping, row-for-row the shipped fixture table:
// conduction codes excluded everywhere, retained non-target rhythms map to
// the all-zero vector.
MappingOutcome map_rhythm(RhythmCode code, const TaskSpec& task);

// External (Liu et al.) label mapping; codes 0..5, PVC/PAC excluded.
MappingOutcome map_external(int liu_code, const TaskSpec& task);

// Classification: one-hot/zero vector, absent when rhythm missing or
// excluded. Regression: the raw label(s), absent when missing.
std::optional<std::vector<double>> encode_targets(const PpgSegment& segment, const TaskSpec& task);

struct TaskSample {
    PpgSegment segment;
    std::vector<double> target;
};

// Keeps exactly the segments with a defined target, input order preserved.
// use_external_labels switches the source from rhythm to liu_code.
std::vector<TaskSample> build_task_dataset(const Dataset& dataset, const TaskSpec& task,
                                           bool use_external_labels = false);

inline constexpr const char* kRhythmMappingFixtureVersion = "rhythm_mapping v1";
inline constexpr const char* kEthnicityFixtureVersion = "ethnicity_mapping v1";

}  // namespace ppgbench
