#include "ppgbench/tasks.hpp"

#include "ppgbench/errors.hpp"

namespace ppgbench {

std::string_view to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::AF: return "AF";
        case TaskKind::SAA: return "SAA";
        case TaskKind::ARRH: return "ARRH";
        case TaskKind::REG_HR: return "REG_HR";
        case TaskKind::REG_RR: return "REG_RR";
        case TaskKind::REG_BP: return "REG_BP";
    }
    return "?";
}

std::optional<TaskKind> parse_task_kind(std::string_view text) {
    if (text == "AF" || text == "af") return TaskKind::AF;
    if (text == "SAA" || text == "saa") return TaskKind::SAA;
    if (text == "ARRH" || text == "arrh") return TaskKind::ARRH;
    if (text == "REG_HR" || text == "reg_hr" || text == "hr") return TaskKind::REG_HR;
    if (text == "REG_RR" || text == "reg_rr" || text == "rr") return TaskKind::REG_RR;
    if (text == "REG_BP" || text == "reg_bp" || text == "bp") return TaskKind::REG_BP;
    return std::nullopt;
}

bool is_classification(TaskKind kind) {
    return kind == TaskKind::AF || kind == TaskKind::SAA || kind == TaskKind::ARRH;
}

TaskSpec make_task_spec(TaskKind kind) {
    switch (kind) {
        case TaskKind::AF:
            return {kind, 2, {"AF", "AFLT"}};
        case TaskKind::SAA:
            return {kind, 2, {"SINUS", "AF+AFLT"}};
        case TaskKind::ARRH:
            // The 13 classes above the sample threshold, descending frequency.
            return {kind, 13,
                    {"SR", "STACH", "AF", "SBRAD", "VPACE", "AVPACE", "AFLT", "APACE", "SARRH", "JR",
                     "SVTACH", "MATACH", "VTACH"}};
        case TaskKind::REG_HR:
            return {kind, 1, {"HR"}};
        case TaskKind::REG_RR:
            return {kind, 1, {"RR"}};
        case TaskKind::REG_BP:
            return {kind, 2, {"SBP", "DBP"}};
    }
    throw ValidationError("unknown task kind");
}

MappingOutcome map_rhythm(RhythmCode code, const TaskSpec& task) {
    if (!is_classification(task.kind))
        throw ValidationError("map_rhythm: task must be a classification task");
    if (is_conduction_code(code)) return MappingOutcome::excluded();

    switch (task.kind) {
        case TaskKind::AF:
            if (code == RhythmCode::AF) return MappingOutcome::target(0);
            if (code == RhythmCode::AFLT) return MappingOutcome::target(1);
            return MappingOutcome::zero();
        case TaskKind::SAA:
            switch (code) {
                case RhythmCode::SR:
                case RhythmCode::STACH:
                case RhythmCode::SBRAD:
                case RhythmCode::SARRH:
                    return MappingOutcome::target(0);  // SINUS
                case RhythmCode::AF:
                case RhythmCode::AFLT:
                    return MappingOutcome::target(1);  // AF+AFLT
                default:
                    return MappingOutcome::zero();
            }
        case TaskKind::ARRH: {
            const int idx = static_cast<int>(code);
            if (idx < 13) return MappingOutcome::target(idx);
            return MappingOutcome::zero();  // WAPACE, JTACH, OTHER, PATACH, VFIB, ASYS, IDIOV
        }
        default:
            break;
    }
    throw ValidationError("map_rhythm: unreachable task kind");
}

MappingOutcome map_external(int liu_code, const TaskSpec& task) {
    if (!is_classification(task.kind))
        throw ValidationError("map_external: task must be a classification task");
    if (liu_code < 0 || liu_code > 5)
        throw ValidationError("map_external: liu_code " + std::to_string(liu_code) + " outside 0..5");

    auto target_for = [&](RhythmCode code) { return map_rhythm(code, task); };
    switch (liu_code) {
        case 0:  // sinus rhythm
            return target_for(RhythmCode::SR);
        case 1:  // premature ventricular contraction
        case 2:  // premature atrial contraction
            return MappingOutcome::excluded();
        case 3:  // ventricular tachycardia
            return target_for(RhythmCode::VTACH);
        case 4:  // supraventricular tachycardia
            return target_for(RhythmCode::SVTACH);
        case 5:  // AF
            return target_for(RhythmCode::AF);
    }
    throw ValidationError("map_external: unreachable");
}

std::optional<std::vector<double>> encode_targets(const PpgSegment& segment, const TaskSpec& task) {
    if (is_classification(task.kind)) {
        if (!segment.rhythm) return std::nullopt;
        const MappingOutcome outcome = map_rhythm(*segment.rhythm, task);
        if (outcome.kind == MappingOutcome::Kind::Excluded) return std::nullopt;
        std::vector<double> target(static_cast<size_t>(task.output_dim), 0.0);
        for (int idx : outcome.indices) target[static_cast<size_t>(idx)] = 1.0;
        return target;
    }
    switch (task.kind) {
        case TaskKind::REG_HR:
            if (!segment.hr_bpm) return std::nullopt;
            return std::vector<double>{*segment.hr_bpm};
        case TaskKind::REG_RR:
            if (!segment.rr_bpm) return std::nullopt;
            return std::vector<double>{*segment.rr_bpm};
        case TaskKind::REG_BP:
            if (!segment.sbp_mmhg || !segment.dbp_mmhg) return std::nullopt;
            return std::vector<double>{*segment.sbp_mmhg, *segment.dbp_mmhg};
        default:
            break;
    }
    throw ValidationError("encode_targets: unreachable task kind");
}

std::vector<TaskSample> build_task_dataset(const Dataset& dataset, const TaskSpec& task,
                                           bool use_external_labels) {
    std::vector<TaskSample> samples;
    for (const PpgSegment& seg : dataset.segments) {
        if (use_external_labels) {
            if (!is_classification(task.kind))
                throw ValidationError("external labels only apply to classification tasks");
            if (!seg.liu_code) continue;
            const MappingOutcome outcome = map_external(*seg.liu_code, task);
            if (outcome.kind == MappingOutcome::Kind::Excluded) continue;
            std::vector<double> target(static_cast<size_t>(task.output_dim), 0.0);
            for (int idx : outcome.indices) target[static_cast<size_t>(idx)] = 1.0;
            samples.push_back({seg, std::move(target)});
            continue;
        }
        auto target = encode_targets(seg, task);
        if (!target) continue;
        samples.push_back({seg, std::move(*target)});
    }
    return samples;
}

}  // namespace ppgbench
