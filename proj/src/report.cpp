#include "ppgbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ppgbench/errors.hpp"

namespace ppgbench {

namespace {

using nlohmann::json;

json opt_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_number(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

json label_to_json(const LabelMetrics& lm, bool with_insufficient) {
    json row;
    row["label"] = lm.label;
    row["auroc"] = opt_to_json(lm.auroc);
    row["sens_at_spec80"] = opt_to_json(lm.sens_at_spec80);
    row["spec_at_sens80"] = opt_to_json(lm.spec_at_sens80);
    row["n_pos"] = lm.n_pos;
    row["n_neg"] = lm.n_neg;
    if (with_insufficient) row["insufficient"] = lm.insufficient;
    return row;
}

json regression_to_json(const RegressionMetrics& rm) {
    json row;
    row["name"] = rm.name;
    row["mae"] = rm.mae;
    row["bias"] = rm.bias;
    row["loa_low"] = rm.loa_low;
    row["loa_high"] = rm.loa_high;
    return row;
}

}  // namespace

json report_to_json(const EvalReport& report, const json& provenance) {
    json doc;
    doc["format_version"] = kReportFormatVersion;
    doc["tool_version"] = kToolVersion;
    doc["provenance"] = provenance;
    if (!report.per_label.empty()) {
        json labels = json::array();
        for (const auto& lm : report.per_label) labels.push_back(label_to_json(lm, false));
        doc["per_label"] = labels;
        doc["macro_auroc"] = opt_to_json(report.macro_auroc);
    }
    if (!report.regression.empty()) {
        json rows = json::array();
        for (const auto& rm : report.regression) rows.push_back(regression_to_json(rm));
        doc["regression"] = rows;
    }
    if (!report.baseline_regression.empty()) {
        json rows = json::array();
        for (const auto& rm : report.baseline_regression) rows.push_back(regression_to_json(rm));
        doc["baseline_regression"] = rows;
    }
    return doc;
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "# ppgbench report-csv v" << kReportFormatVersion << "\n";
    if (!report.per_label.empty()) {
        os << "label,n_pos,n_neg,auroc,sens_at_spec80,spec_at_sens80\n";
        for (const auto& lm : report.per_label) {
            os << lm.label << ',' << lm.n_pos << ',' << lm.n_neg << ',';
            os << (lm.auroc ? csv_number(*lm.auroc) : "") << ',';
            os << (lm.sens_at_spec80 ? csv_number(*lm.sens_at_spec80) : "") << ',';
            os << (lm.spec_at_sens80 ? csv_number(*lm.spec_at_sens80) : "") << '\n';
        }
        if (report.macro_auroc) os << "macro,,," << csv_number(*report.macro_auroc) << ",,\n";
    }
    if (!report.regression.empty()) {
        os << "name,mae,bias,loa_low,loa_high\n";
        for (const auto& rm : report.regression)
            os << rm.name << ',' << csv_number(rm.mae) << ',' << csv_number(rm.bias) << ','
               << csv_number(rm.loa_low) << ',' << csv_number(rm.loa_high) << '\n';
        for (const auto& rm : report.baseline_regression)
            os << rm.name << " (baseline)," << csv_number(rm.mae) << ',' << csv_number(rm.bias) << ','
               << csv_number(rm.loa_low) << ',' << csv_number(rm.loa_high) << '\n';
    }
    return os.str();
}

json strata_to_json(const std::vector<StratumReport>& reports, const json& provenance) {
    json doc;
    doc["format_version"] = kReportFormatVersion;
    doc["tool_version"] = kToolVersion;
    doc["provenance"] = provenance;
    json strata = json::array();
    for (const auto& sr : reports) {
        json entry;
        entry["stratum"] = sr.stratum;
        entry["n_segments"] = sr.n_segments;
        json labels = json::array();
        for (const auto& lm : sr.report.per_label) labels.push_back(label_to_json(lm, true));
        entry["per_label"] = labels;
        entry["macro_auroc"] = opt_to_json(sr.report.macro_auroc);
        strata.push_back(entry);
    }
    doc["strata"] = strata;
    return doc;
}

namespace {

constexpr double kW = 480.0, kH = 480.0, kMargin = 50.0;

double sx(double unit) { return kMargin + unit * (kW - 2.0 * kMargin); }
double sy(double unit) { return kH - kMargin - unit * (kH - 2.0 * kMargin); }

void svg_header(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
       << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
       << "</text>\n";
}

}  // namespace

std::string roc_svg(const std::vector<double>& scores, const std::vector<int>& labels,
                    const std::string& label_name) {
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y != 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("roc_svg: needs both classes for label " + label_name);

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::ostringstream pts;
    pts << sx(0.0) << ',' << sy(0.0);
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) (labels[idx[k]] != 0 ? tp : fp)++;
        pts << ' ' << sx(static_cast<double>(fp) / static_cast<double>(n_neg)) << ','
            << sy(static_cast<double>(tp) / static_cast<double>(n_pos));
        i = j + 1;
    }

    std::ostringstream os;
    svg_header(os, "ROC: " + label_name);
    os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kW - 2 * kMargin
       << "\" height=\"" << kH - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1) << "\" y2=\"" << sy(1)
       << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12
       << "\" text-anchor=\"middle\" font-size=\"12\">false positive rate</text>\n";
    os << "<text x=\"14\" y=\"" << kH / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << kH / 2
       << ")\" text-anchor=\"middle\">true positive rate</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string bland_altman_svg(const std::vector<double>& pred, const std::vector<double>& ref,
                             const std::string& output_name) {
    const BlandAltman ba = bland_altman(pred, ref);
    std::vector<double> means(pred.size()), diffs(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        means[i] = 0.5 * (pred[i] + ref[i]);
        diffs[i] = pred[i] - ref[i];
    }
    const auto [mn_it, mx_it] = std::minmax_element(means.begin(), means.end());
    double x_lo = *mn_it, x_hi = *mx_it;
    if (x_hi - x_lo < 1e-12) {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    double y_lo = std::min(*std::min_element(diffs.begin(), diffs.end()), ba.loa_low);
    double y_hi = std::max(*std::max_element(diffs.begin(), diffs.end()), ba.loa_high);
    const double y_pad = 0.1 * std::max(y_hi - y_lo, 1e-6);
    y_lo -= y_pad;
    y_hi += y_pad;

    auto ux = [&](double v) { return sx((v - x_lo) / (x_hi - x_lo)); };
    auto uy = [&](double v) { return sy((v - y_lo) / (y_hi - y_lo)); };

    std::ostringstream os;
    svg_header(os, "Bland-Altman: " + output_name);
    os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kW - 2 * kMargin
       << "\" height=\"" << kH - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < means.size(); ++i)
        os << "<circle cx=\"" << ux(means[i]) << "\" cy=\"" << uy(diffs[i])
           << "\" r=\"2\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n";
    struct Rule {
        const char* cls;
        double v;
    };
    for (const Rule& rule : {Rule{"bias", ba.bias}, Rule{"loa-low", ba.loa_low}, Rule{"loa-high", ba.loa_high}}) {
        os << "<line class=\"" << rule.cls << "\" x1=\"" << sx(0) << "\" y1=\"" << uy(rule.v) << "\" x2=\""
           << sx(1) << "\" y2=\"" << uy(rule.v) << "\" stroke=\""
           << (std::string(rule.cls) == "bias" ? "#d62728" : "#555") << "\" stroke-dasharray=\"6 3\"/>\n";
        os << "<text x=\"" << sx(1) - 4 << "\" y=\"" << uy(rule.v) - 4
           << "\" text-anchor=\"end\" font-size=\"10\">" << rule.cls << "=" << csv_number(rule.v)
           << "</text>\n";
    }
    os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12
       << "\" text-anchor=\"middle\" font-size=\"12\">mean of pair</text>\n";
    os << "<text x=\"14\" y=\"" << kH / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << kH / 2
       << ")\" text-anchor=\"middle\">difference (pred - ref)</text>\n";
    os << "</svg>\n";
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeAbort("cannot open for writing: " + path.string());
    out << content;
    if (!out.good()) throw RuntimeAbort("I/O failure writing " + path.string());
}

}  // namespace ppgbench
