#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "ppgbench/errors.hpp"
#include "ppgbench/report.hpp"

using namespace ppgbench;

namespace {

EvalReport sample_classification_report() {
    EvalReport r;
    LabelMetrics af;
    af.label = "AF";
    af.auroc = 0.96;
    af.sens_at_spec80 = 0.92;
    af.spec_at_sens80 = 0.98;
    af.n_pos = 120;
    af.n_neg = 280;
    LabelMetrics aflt;
    aflt.label = "AFLT";
    aflt.n_pos = 0;
    aflt.n_neg = 400;  // undefined metrics stay null
    r.per_label = {af, aflt};
    r.macro_auroc = 0.96;
    return r;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

}  // namespace

TEST_CASE("classification report serializes with nulls for undefined metrics") {
    const EvalReport r = sample_classification_report();
    const nlohmann::json doc = report_to_json(r, {{"run_config", {{"task", "AF"}}}});
    CHECK(doc["format_version"] == kReportFormatVersion);
    CHECK(doc["tool_version"] == kToolVersion);
    CHECK(doc["per_label"].size() == 2);
    CHECK(doc["per_label"][0]["auroc"] == doctest::Approx(0.96));
    CHECK(doc["per_label"][1]["auroc"].is_null());
    CHECK(doc["per_label"][1]["sens_at_spec80"].is_null());
    CHECK(doc["macro_auroc"] == doctest::Approx(0.96));
    CHECK(doc["provenance"]["run_config"]["task"] == "AF");

    // canonical order: nlohmann::json sorts keys alphabetically
    const std::string dumped = doc.dump();
    CHECK(dumped.find("\"format_version\"") < dumped.find("\"macro_auroc\""));
    CHECK(dumped.find("\"macro_auroc\"") < dumped.find("\"per_label\""));
}

TEST_CASE("csv rendering carries the version line and empty cells for dashes") {
    const std::string csv = report_to_csv(sample_classification_report());
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "# ppgbench report-csv v1");
    std::getline(lines, line);
    CHECK(line == "label,n_pos,n_neg,auroc,sens_at_spec80,spec_at_sens80");
    std::getline(lines, line);
    CHECK(line.substr(0, 3) == "AF,");
    std::getline(lines, line);
    CHECK(line == "AFLT,0,400,,,");
}

TEST_CASE("regression report round-trips mae and agreement rows, baseline included") {
    EvalReport r;
    r.regression = {{"SBP", 16.13, -2.58, -43.16, 38.00}, {"DBP", 8.70, 0.79, -21.34, 22.92}};
    r.baseline_regression = {{"SBP", 19.06, 0.0, -1.0, 1.0}};
    const nlohmann::json doc = report_to_json(r, nlohmann::json::object());
    CHECK(doc["regression"][0]["name"] == "SBP");
    CHECK(doc["regression"][0]["mae"] == doctest::Approx(16.13));
    CHECK(doc["regression"][1]["loa_high"] == doctest::Approx(22.92));
    CHECK(doc["baseline_regression"][0]["mae"] == doctest::Approx(19.06));

    const std::string csv = report_to_csv(r);
    CHECK(csv.find("name,mae,bias,loa_low,loa_high") != std::string::npos);
    CHECK(csv.find("SBP,16.13,-2.58,-43.16,38") != std::string::npos);
    CHECK(csv.find("SBP (baseline),19.06") != std::string::npos);
}

TEST_CASE("strata serialization keeps per-stratum counts and insufficiency flags") {
    StratumReport sr;
    sr.stratum = "Bradycardia";
    sr.n_segments = 42;
    LabelMetrics lm;
    lm.label = "AF";
    lm.insufficient = true;
    sr.report.per_label = {lm};
    const nlohmann::json doc = strata_to_json({sr}, nlohmann::json::object());
    CHECK(doc["strata"][0]["stratum"] == "Bradycardia");
    CHECK(doc["strata"][0]["n_segments"] == 42);
    CHECK(doc["strata"][0]["per_label"][0]["insufficient"] == true);
    CHECK(doc["strata"][0]["per_label"][0]["auroc"].is_null());
}

TEST_CASE("roc svg contains the curve and rejects single-class input") {
    const std::string svg = roc_svg({0.9, 0.8, 0.3, 0.1}, {1, 1, 0, 0}, "AF");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("ROC: AF") != std::string::npos);
    CHECK_THROWS_AS(roc_svg({0.9, 0.8}, {1, 1}, "AF"), ValidationError);
}

TEST_CASE("bland-altman svg draws exactly three horizontal rule lines") {
    std::vector<double> pred = {120, 118, 131, 99, 125};
    std::vector<double> ref = {122, 115, 133, 101, 121};
    const std::string svg = bland_altman_svg(pred, ref, "SBP");
    CHECK(count_occurrences(svg, "class=\"bias\"") == 1);
    CHECK(count_occurrences(svg, "class=\"loa-low\"") == 1);
    CHECK(count_occurrences(svg, "class=\"loa-high\"") == 1);
    CHECK(count_occurrences(svg, "<circle") == pred.size());
    CHECK(svg.find("Bland-Altman: SBP") != std::string::npos);
}
