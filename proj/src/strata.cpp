#include "ppgbench/strata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "ppgbench/errors.hpp"

namespace ppgbench {

std::string_view to_string(BpCategory c) {
    switch (c) {
        case BpCategory::Hypotension: return "Hypotension";
        case BpCategory::Normal: return "Normal";
        case BpCategory::Elevated: return "Elevated";
        case BpCategory::Stage1: return "Stage1";
        case BpCategory::Stage2: return "Stage2";
    }
    return "?";
}

std::string_view to_string(HrCategory c) {
    switch (c) {
        case HrCategory::Bradycardia: return "Bradycardia";
        case HrCategory::Normal: return "Normal";
        case HrCategory::Tachycardia: return "Tachycardia";
    }
    return "?";
}

std::string_view to_string(BmiCategory c) {
    switch (c) {
        case BmiCategory::Underweight: return "Underweight";
        case BmiCategory::Normal: return "Normal";
        case BmiCategory::Overweight: return "Overweight";
        case BmiCategory::Obese: return "Obese";
    }
    return "?";
}

std::string_view to_string(EthnicityGroup g) {
    switch (g) {
        case EthnicityGroup::White: return "White";
        case EthnicityGroup::Black: return "Black";
        case EthnicityGroup::Asian: return "Asian";
        case EthnicityGroup::Hispanic: return "Hispanic";
        case EthnicityGroup::Other: return "Other";
    }
    return "?";
}

BpCategory bp_category(double sbp, double dbp) {
    if (!std::isfinite(sbp) || !std::isfinite(dbp))
        throw ValidationError("bp_category: non-finite input");
    if (!(sbp > dbp)) throw ValidationError("bp_category: requires sbp > dbp");
    if (sbp < 90.0 || dbp < 60.0) return BpCategory::Hypotension;
    if (sbp >= 140.0 || dbp >= 90.0) return BpCategory::Stage2;
    if (sbp >= 130.0 || dbp >= 80.0) return BpCategory::Stage1;
    if (sbp >= 120.0) return BpCategory::Elevated;
    return BpCategory::Normal;
}

HrCategory hr_category(double hr) {
    if (!(hr > 0.0) || !std::isfinite(hr)) throw ValidationError("hr_category: hr must be positive");
    if (hr < 60.0) return HrCategory::Bradycardia;
    if (hr <= 100.0) return HrCategory::Normal;
    return HrCategory::Tachycardia;
}

double bmi(double weight_kg, double height_cm) {
    if (!(weight_kg > 0.0) || !(height_cm > 0.0))
        throw ValidationError("bmi: weight and height must be positive");
    const double h = height_cm / 100.0;
    return weight_kg / (h * h);
}

BmiCategory bmi_category(double b) {
    if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("bmi_category: bmi must be positive");
    if (b < 18.5) return BmiCategory::Underweight;
    if (b < 25.0) return BmiCategory::Normal;
    if (b < 30.0) return BmiCategory::Overweight;
    return BmiCategory::Obese;
}

namespace {

std::string normalize_label(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char ch : raw) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
    return out;
}

// Mirrors fixtures/ethnicity_mapping.csv (the conformance test diffs them).
const std::unordered_map<std::string, EthnicityGroup>& ethnicity_table() {
    static const std::unordered_map<std::string, EthnicityGroup> table = {
        {"WHITE", EthnicityGroup::White},
        {"WHITE - RUSSIAN", EthnicityGroup::White},
        {"WHITE - EASTERN EUROPEAN", EthnicityGroup::White},
        {"WHITE - OTHER EUROPEAN", EthnicityGroup::White},
        {"WHITE - BRAZILIAN", EthnicityGroup::White},
        {"PORTUGUESE", EthnicityGroup::White},
        {"MIDDLE EASTERN", EthnicityGroup::White},
        {"BLACK/AFRICAN AMERICAN", EthnicityGroup::Black},
        {"BLACK/AFRICAN", EthnicityGroup::Black},
        {"BLACK/CAPE VERDEAN", EthnicityGroup::Black},
        {"BLACK/HAITIAN", EthnicityGroup::Black},
        {"ASIAN", EthnicityGroup::Asian},
        {"ASIAN - CHINESE", EthnicityGroup::Asian},
        {"ASIAN - ASIAN INDIAN", EthnicityGroup::Asian},
        {"ASIAN - CAMBODIAN", EthnicityGroup::Asian},
        {"ASIAN - VIETNAMESE", EthnicityGroup::Asian},
        {"ASIAN - OTHER", EthnicityGroup::Asian},
        {"ASIAN - FILIPINO", EthnicityGroup::Asian},
        {"ASIAN - KOREAN", EthnicityGroup::Asian},
        {"ASIAN - JAPANESE", EthnicityGroup::Asian},
        {"HISPANIC OR LATINO", EthnicityGroup::Hispanic},
        {"HISPANIC/LATINO - PUERTO RICAN", EthnicityGroup::Hispanic},
        {"HISPANIC/LATINO - DOMINICAN", EthnicityGroup::Hispanic},
        {"HISPANIC/LATINO - GUATEMALAN", EthnicityGroup::Hispanic},
        {"HISPANIC/LATINO - CENTRAL AMERICAN (OTHER)", EthnicityGroup::Hispanic},
        {"HISPANIC/LATINO - SALVADORAN", EthnicityGroup::Hispanic},
        {"HISPANIC/LATINO - MEXICAN", EthnicityGroup::Hispanic},
        {"HISPANIC/LATINO - COLOMBIAN", EthnicityGroup::Hispanic},
        {"HISPANIC/LATINO - HONDURAN", EthnicityGroup::Hispanic},
        {"HISPANIC/LATINO - CUBAN", EthnicityGroup::Hispanic},
        {"OTHER", EthnicityGroup::Other},
        {"UNKNOWN/NOT SPECIFIED", EthnicityGroup::Other},
        {"UNABLE TO OBTAIN", EthnicityGroup::Other},
        {"PATIENT DECLINED TO ANSWER", EthnicityGroup::Other},
        {"AMERICAN INDIAN/ALASKA NATIVE", EthnicityGroup::Other},
        {"NATIVE HAWAIIAN OR OTHER PACIFIC ISLANDER", EthnicityGroup::Other},
        {"MULTI RACE ETHNICITY", EthnicityGroup::Other},
        {"CARIBBEAN ISLAND", EthnicityGroup::Other},
    };
    return table;
}

}  // namespace

EthnicityGroup map_ethnicity(std::string_view raw) {
    const auto& table = ethnicity_table();
    auto it = table.find(normalize_label(raw));
    return it == table.end() ? EthnicityGroup::Other : it->second;
}

std::string_view to_string(Stratifier s) {
    switch (s) {
        case Stratifier::Bp: return "bp";
        case Stratifier::Hr: return "hr";
        case Stratifier::Bmi: return "bmi";
        case Stratifier::Ethnicity: return "ethnicity";
        case Stratifier::Gender: return "gender";
    }
    return "?";
}

std::optional<Stratifier> parse_stratifier(std::string_view text) {
    if (text == "bp") return Stratifier::Bp;
    if (text == "hr") return Stratifier::Hr;
    if (text == "bmi") return Stratifier::Bmi;
    if (text == "ethnicity") return Stratifier::Ethnicity;
    if (text == "gender") return Stratifier::Gender;
    return std::nullopt;
}

namespace {

std::vector<std::string> stratum_names(Stratifier s) {
    switch (s) {
        case Stratifier::Bp:
            return {"Hypotension", "Normal", "Elevated", "Stage1", "Stage2"};
        case Stratifier::Hr:
            return {"Bradycardia", "Normal", "Tachycardia"};
        case Stratifier::Bmi:
            return {"Underweight", "Normal", "Overweight", "Obese"};
        case Stratifier::Ethnicity:
            return {"White", "Black", "Asian", "Hispanic", "Other"};
        case Stratifier::Gender:
            return {"female", "male"};
    }
    return {};
}

std::optional<std::string> stratum_of(const PpgSegment& seg, Stratifier s) {
    switch (s) {
        case Stratifier::Bp:
            if (!seg.sbp_mmhg || !seg.dbp_mmhg || !(*seg.sbp_mmhg > *seg.dbp_mmhg)) return std::nullopt;
            return std::string(to_string(bp_category(*seg.sbp_mmhg, *seg.dbp_mmhg)));
        case Stratifier::Hr:
            if (!seg.hr_bpm || !(*seg.hr_bpm > 0.0)) return std::nullopt;
            return std::string(to_string(hr_category(*seg.hr_bpm)));
        case Stratifier::Bmi:
            if (!seg.weight_kg || !seg.height_cm || !(*seg.weight_kg > 0.0) || !(*seg.height_cm > 0.0))
                return std::nullopt;
            return std::string(to_string(bmi_category(bmi(*seg.weight_kg, *seg.height_cm))));
        case Stratifier::Ethnicity:
            if (!seg.ethnicity_raw) return std::nullopt;
            return std::string(to_string(map_ethnicity(*seg.ethnicity_raw)));
        case Stratifier::Gender:
            if (!seg.gender) return std::nullopt;
            return std::string(to_string(*seg.gender));
    }
    return std::nullopt;
}

}  // namespace

std::vector<StratumReport> stratified_evaluate(const TaskSpec& task, const Matrix& predictions,
                                               const std::vector<PpgSegment>& segments,
                                               Stratifier stratifier, int min_per_class) {
    if (!is_classification(task.kind))
        throw ValidationError("stratified_evaluate: only classification tasks have per-label strata");
    if (predictions.rows != segments.size())
        throw ValidationError("stratified_evaluate: predictions misaligned with segments (" +
                              std::to_string(predictions.rows) + " rows vs " +
                              std::to_string(segments.size()) + " segments)");
    if (min_per_class < 1) throw ValidationError("stratified_evaluate: min_per_class must be >= 1");

    std::vector<StratumReport> reports;
    for (const std::string& name : stratum_names(stratifier)) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const auto s = stratum_of(segments[i], stratifier);
            if (s && *s == name) members.push_back(i);
        }

        StratumReport sr;
        sr.stratum = name;
        sr.n_segments = members.size();
        for (std::size_t j = 0; j < static_cast<std::size_t>(task.output_dim); ++j) {
            std::vector<double> scores;
            std::vector<int> labels;
            scores.reserve(members.size());
            labels.reserve(members.size());
            std::size_t n_pos = 0;
            for (std::size_t i : members) {
                const auto target = encode_targets(segments[i], task);
                if (!target)
                    throw ValidationError("stratified_evaluate: segment '" + segments[i].segment_id +
                                          "' has no target for this task");
                scores.push_back(predictions.at(i, j));
                labels.push_back((*target)[j] > 0.5 ? 1 : 0);
                n_pos += static_cast<std::size_t>(labels.back());
            }

            LabelMetrics lm;
            lm.label = task.output_names[j];
            lm.n_pos = n_pos;
            lm.n_neg = members.size() - n_pos;
            const auto min_n = static_cast<std::size_t>(min_per_class);
            if (lm.n_pos >= min_n && lm.n_neg >= min_n) {
                lm.auroc = auroc(scores, labels);
                if (auto op = operating_point(scores, labels, {OperatingConstraint::Kind::MinSpecificity, 0.8}))
                    lm.sens_at_spec80 = op->sensitivity;
                if (auto op = operating_point(scores, labels, {OperatingConstraint::Kind::MinSensitivity, 0.8}))
                    lm.spec_at_sens80 = op->specificity;
            } else {
                lm.insufficient = true;  // the tables' dash
            }
            sr.report.per_label.push_back(std::move(lm));
        }
        std::vector<std::optional<double>> aurocs;
        for (const auto& lm : sr.report.per_label) aurocs.push_back(lm.auroc);
        sr.report.macro_auroc = macro_average(aurocs);
        reports.push_back(std::move(sr));
    }
    return reports;
}

}  // namespace ppgbench
