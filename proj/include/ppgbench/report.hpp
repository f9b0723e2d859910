#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppgbench/metrics.hpp"
#include "ppgbench/strata.hpp"

namespace ppgbench {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kReportFormatVersion = 1;

// Canonical (alphabetical) key order; undefined metrics serialize as null.
nlohmann::json report_to_json(const EvalReport& report, const nlohmann::json& provenance);

// One row per label (classification) or per output (regression); a leading
// comment line carries the format version. Undefined metrics are empty cells.
std::string report_to_csv(const EvalReport& report);

nlohmann::json strata_to_json(const std::vector<StratumReport>& reports,
                              const nlohmann::json& provenance);

// ROC curve from the full threshold sweep of one label.
std::string roc_svg(const std::vector<double>& scores, const std::vector<int>& labels,
                    const std::string& label_name);

// Scatter of pair means vs differences with horizontal rules at the bias and
// both limits of agreement.
std::string bland_altman_svg(const std::vector<double>& pred, const std::vector<double>& ref,
                             const std::string& output_name);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace ppgbench
