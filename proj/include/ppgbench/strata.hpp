#pragma once

#include <string>
#include <vector>

#include "ppgbench/metrics.hpp"
#include "ppgbench/segment.hpp"
#include "ppgbench/tasks.hpp"

namespace ppgbench {

enum class BpCategory { Hypotension, Normal, Elevated, Stage1, Stage2 };
enum class HrCategory { Bradycardia, Normal, Tachycardia };
enum class BmiCategory { Underweight, Normal, Overweight, Obese };
enum class EthnicityGroup { White, Black, Asian, Hispanic, Other };

std::string_view to_string(BpCategory c);
std::string_view to_string(HrCategory c);
std::string_view to_string(BmiCategory c);
std::string_view to_string(EthnicityGroup g);

// Guideline ladder with the higher category winning on mixed readings;
// hypotension (sbp < 90 OR dbp < 60) takes precedence over everything.
BpCategory bp_category(double sbp_mmhg, double dbp_mmhg);

// < 60 bradycardia, 60..100 normal (inclusive), > 100 tachycardia.
HrCategory hr_category(double hr_bpm);

double bmi(double weight_kg, double height_cm);

// WHO bands: < 18.5, [18.5, 25), [25, 30), >= 30.
BmiCategory bmi_category(double bmi_value);

// Exact-match lookup after case/whitespace normalization; misses -> Other.
EthnicityGroup map_ethnicity(std::string_view raw);

enum class Stratifier { Bp, Hr, Bmi, Ethnicity, Gender };

std::string_view to_string(Stratifier s);
std::optional<Stratifier> parse_stratifier(std::string_view text);

struct StratumReport {
    std::string stratum;
    std::size_t n_segments = 0;
    EvalReport report;
};

// Partitions segments by category (segments lacking the stratifier's inputs
// are dropped); per-label metrics reported only where both classes have at
// least min_per_class members, else flagged insufficient.
std::vector<StratumReport> stratified_evaluate(const TaskSpec& task, const Matrix& predictions,
                                               const std::vector<PpgSegment>& segments,
                                               Stratifier stratifier, int min_per_class);

inline constexpr int kDefaultMinPerClass = 10;

}  // namespace ppgbench
