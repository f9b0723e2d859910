// End-to-end exercises of the ppgbench binary: every subcommand, exit codes,
// and byte-level determinism of the artifacts.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ppgbench/dataset_io.hpp"
#include "ppgbench/synth.hpp"

using namespace ppgbench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = PPGBENCH_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>/tmp/ppgbench_cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string last_stderr() {
    std::ifstream in("/tmp/ppgbench_cli_stderr.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("ppgbench_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::uint64_t file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::uint64_t h = 1469598103934665603ull;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::size_t line_count(const fs::path& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

void write_spec(const fs::path& path, int sr_count, int af_count, double duration_s) {
    std::ofstream out(path, std::ios::trunc);
    out << R"({"seed": 11, "noise_std": 0.1, "duration_s": )" << duration_s
        << R"(, "segments_per_subject": 2, "classes": [)"
        << R"({"rhythm": "SR", "count": )" << sr_count << R"(},)"
        << R"({"rhythm": "AF", "count": )" << af_count << R"(}]})";
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return json::parse(in);
}

}  // namespace

TEST_CASE("synth: manifest size, per-run determinism, spec validation") {
    const fs::path dir = fresh_dir("synth");
    const fs::path spec = dir / "spec.json";
    write_spec(spec, 30, 30, 4.0);

    REQUIRE(run_cli("synth --spec " + spec.string() + " --out " + (dir / "a").string()) == 0);
    CHECK(line_count(dir / "a" / "manifest.jsonl") == 60);

    REQUIRE(run_cli("synth --spec " + spec.string() + " --out " + (dir / "b").string()) == 0);
    CHECK(file_hash(dir / "a" / "manifest.jsonl") == file_hash(dir / "b" / "manifest.jsonl"));
    CHECK(file_hash(dir / "a" / "signals.bin") == file_hash(dir / "b" / "signals.bin"));

    std::ofstream bad(spec, std::ios::trunc);
    bad << R"({"classes": [{"rhythm": "STACH", "count": 2, "hr_bpm": [80, 90]}]})";
    bad.close();
    CHECK(run_cli("synth --spec " + spec.string() + " --out " + (dir / "c").string()) == 2);
    CHECK(last_stderr().find("STACH requires hr_bpm > 100") != std::string::npos);
}

TEST_CASE("full pipeline: train, eval, strata, external, report") {
    const fs::path dir = fresh_dir("pipeline");
    const fs::path spec = dir / "spec.json";
    write_spec(spec, 40, 40, 4.0);
    const fs::path data = dir / "data";
    REQUIRE(run_cli("synth --spec " + spec.string() + " --out " + data.string()) == 0);

    SUBCASE("preprocess writes a cleaned dataset of the same shape") {
        const fs::path cleaned = dir / "cleaned";
        REQUIRE(run_cli("preprocess --data " + data.string() + " --out " + cleaned.string()) == 0);
        CHECK(line_count(cleaned / "manifest.jsonl") == 80);
        const Dataset ds = load_dataset(cleaned);
        CHECK(ds.segments.size() == 80);
    }

    SUBCASE("train produces a checkpoint and history; identical seeds, identical bytes") {
        const std::string train_args = " --task af --data " + data.string() +
                                       " --epochs 2 --effective-batch 16 --micro-batch 8 --seed 3";
        const fs::path run1 = dir / "run1";
        REQUIRE(run_cli("train" + train_args + " --out " + run1.string()) == 0);
        CHECK(fs::exists(run1 / "checkpoint.ppgb"));
        const std::uint64_t first_hash = file_hash(run1 / "checkpoint.ppgb");
        REQUIRE(run_cli("train" + train_args + " --out " + run1.string()) == 0);  // same dir, rerun
        CHECK(file_hash(run1 / "checkpoint.ppgb") == first_hash);

        const json history = read_json(run1 / "history.json");
        CHECK(history["history"]["epochs"].size() == 2);
        CHECK(history["run_config"]["task"] == "af");

        SUBCASE("eval emits reports and ROC plots; reruns are byte-identical") {
            const fs::path out1 = dir / "eval1";
            const fs::path out2 = dir / "eval2";
            const std::string eval_args = " --checkpoint " + (run1 / "checkpoint.ppgb").string() +
                                          " --data " + data.string() + " --task af";
            REQUIRE(run_cli("eval" + eval_args + " --out " + out1.string()) == 0);
            REQUIRE(run_cli("eval" + eval_args + " --out " + out2.string()) == 0);
            CHECK(fs::exists(out1 / "report.json"));
            CHECK(fs::exists(out1 / "report.csv"));
            CHECK(fs::exists(out1 / "roc_AF.svg"));
            CHECK(file_hash(out1 / "report.json") == file_hash(out2 / "report.json"));

            const json report = read_json(out1 / "report.json");
            CHECK(report["per_label"].size() == 2);
            CHECK(report["per_label"][0]["label"] == "AF");
            CHECK(report["per_label"][1]["auroc"].is_null());  // no AFLT positives
            CHECK(!fs::exists(out1 / "roc_AFLT.svg"));         // dash: no curve
            CHECK(report["provenance"]["tool_version"] == "1.0.0");

            const fs::path summary = dir / "summary.md";
            REQUIRE(run_cli("report --input " + (out1 / "report.json").string() + " --out " +
                            summary.string()) == 0);
            const std::string md = [&] {
                std::ifstream in(summary);
                std::stringstream ss;
                ss << in.rdbuf();
                return ss.str();
            }();
            CHECK(md.find("| AF |") != std::string::npos);
        }

        SUBCASE("strata subcommand writes per-subgroup reports") {
            const fs::path out = dir / "strata";
            REQUIRE(run_cli("strata --checkpoint " + (run1 / "checkpoint.ppgb").string() + " --data " +
                            data.string() + " --task af --stratify hr --min-per-class 2 --out " +
                            out.string()) == 0);
            const json doc = read_json(out / "strata_hr.json");
            CHECK(doc["strata"].size() == 3);
        }

        SUBCASE("dimension mismatch between checkpoint and task is a validation error") {
            CHECK(run_cli("eval --checkpoint " + (run1 / "checkpoint.ppgb").string() + " --data " +
                          data.string() + " --task arrh --out " + (dir / "bad").string()) == 2);
        }

        SUBCASE("external command runs variable-length inference on liu-coded data") {
            // 10 s at 100 Hz, the external recording format
            Dataset liu;
            liu.provenance = "synthetic";
            int idx = 0;
            for (int code : {0, 0, 0, 1, 2, 5, 5, 5, 3, 4}) {
                SynthParams p;
                p.rhythm = code == 5 ? RhythmCode::AF : RhythmCode::SR;
                p.hr_bpm = 80.0 + idx;
                p.duration_s = 10.0;
                p.sampling_rate_hz = 100.0;
                p.noise_std = 0.05;
                p.seed = static_cast<std::uint64_t>(900 + idx);
                auto [seg, truth] = generate_segment(p);
                seg.segment_id = "liu-" + std::to_string(idx);
                seg.subject_id = "liusubj-" + std::to_string(idx);
                seg.fold = 1 + (idx % 10);
                seg.rhythm.reset();
                seg.liu_code = code;
                liu.segments.push_back(seg);
                ++idx;
            }
            const fs::path liu_dir = dir / "liu";
            write_dataset(liu, liu_dir);

            const fs::path out = dir / "external";
            REQUIRE(run_cli("external --checkpoint " + (run1 / "checkpoint.ppgb").string() + " --data " +
                            liu_dir.string() + " --task af --out " + out.string()) == 0);
            const json report = read_json(out / "report.json");
            // 10 segments minus 2 excluded (PVC, PAC)
            CHECK(report["per_label"][0]["n_pos"].get<int>() +
                      report["per_label"][0]["n_neg"].get<int>() ==
                  8);

            // resample path also completes
            REQUIRE(run_cli("external --checkpoint " + (run1 / "checkpoint.ppgb").string() + " --data " +
                            liu_dir.string() + " --task af --resample --out " +
                            (dir / "external_rs").string()) == 0);

            // PVC/PAC-only dataset leaves nothing to score
            Dataset excluded_only;
            excluded_only.provenance = "synthetic";
            for (int i = 0; i < 4; ++i) {
                PpgSegment seg = liu.segments[static_cast<std::size_t>(3 + (i % 2))];
                seg.segment_id = "x-" + std::to_string(i);
                seg.subject_id = "xsubj-" + std::to_string(i);
                seg.liu_code = 1 + (i % 2);
                excluded_only.segments.push_back(seg);
            }
            const fs::path excl_dir = dir / "liu_excluded";
            write_dataset(excluded_only, excl_dir);
            CHECK(run_cli("external --checkpoint " + (run1 / "checkpoint.ppgb").string() + " --data " +
                          excl_dir.string() + " --task af --out " + (dir / "external_bad").string()) == 2);
            CHECK(last_stderr().find("exclusions") != std::string::npos);
        }
    }

    SUBCASE("training a BP task on a dataset without BP labels fails cleanly") {
        Dataset ds = load_dataset(data);
        for (auto& seg : ds.segments) {
            seg.sbp_mmhg.reset();
            seg.dbp_mmhg.reset();
        }
        const fs::path nobp = dir / "nobp";
        write_dataset(ds, nobp);
        CHECK(run_cli("train --task reg_bp --data " + nobp.string() + " --epochs 1 --out " +
                      (dir / "nobp_run").string()) == 2);
        CHECK(last_stderr().find("empty task dataset") != std::string::npos);
    }
}

TEST_CASE("regression eval writes Bland-Altman plots and baseline rows") {
    const fs::path dir = fresh_dir("regress");
    const fs::path spec = dir / "spec.json";
    write_spec(spec, 60, 0, 4.0);
    const fs::path data = dir / "data";
    REQUIRE(run_cli("synth --spec " + spec.string() + " --out " + data.string()) == 0);

    const fs::path run = dir / "run";
    REQUIRE(run_cli("train --task reg_hr --data " + data.string() +
                    " --epochs 2 --effective-batch 16 --micro-batch 8 --out " + run.string()) == 0);
    const fs::path out = dir / "eval";
    REQUIRE(run_cli("eval --checkpoint " + (run / "checkpoint.ppgb").string() + " --data " +
                    data.string() + " --task reg_hr --out " + out.string()) == 0);
    CHECK(fs::exists(out / "bland_altman_HR.svg"));
    const json report = read_json(out / "report.json");
    CHECK(report["regression"][0]["name"] == "HR");
    CHECK(report["baseline_regression"][0]["name"] == "HR");
    CHECK(report["baseline_regression"][0]["mae"].get<double>() > 0.0);

    // the joint BP head: two outputs, two agreement plots, SBP row first
    const fs::path bp_run = dir / "bp_run";
    REQUIRE(run_cli("train --task reg_bp --data " + data.string() +
                    " --epochs 2 --effective-batch 16 --micro-batch 8 --out " + bp_run.string()) == 0);
    const fs::path bp_out = dir / "bp_eval";
    REQUIRE(run_cli("eval --checkpoint " + (bp_run / "checkpoint.ppgb").string() + " --data " +
                    data.string() + " --task reg_bp --out " + bp_out.string()) == 0);
    CHECK(fs::exists(bp_out / "bland_altman_SBP.svg"));
    CHECK(fs::exists(bp_out / "bland_altman_DBP.svg"));
    const json bp_report = read_json(bp_out / "report.json");
    CHECK(bp_report["regression"][0]["name"] == "SBP");
    CHECK(bp_report["regression"][1]["name"] == "DBP");
}

TEST_CASE("ARRH task trains and evaluates with absent-class columns dashed") {
    const fs::path dir = fresh_dir("arrh");
    const fs::path spec = dir / "spec.json";
    {
        std::ofstream out(spec, std::ios::trunc);
        out << R"({"seed": 21, "noise_std": 0.1, "duration_s": 4, "segments_per_subject": 2,
                   "classes": [{"rhythm": "SR", "count": 20}, {"rhythm": "AF", "count": 20},
                               {"rhythm": "STACH", "count": 20}, {"rhythm": "SBRAD", "count": 20},
                               {"rhythm": "SARRH", "count": 20}]})";
    }
    const fs::path data = dir / "data";
    REQUIRE(run_cli("synth --spec " + spec.string() + " --out " + data.string()) == 0);

    const fs::path run = dir / "run";
    REQUIRE(run_cli("train --task arrh --data " + data.string() +
                    " --epochs 2 --effective-batch 20 --micro-batch 10 --out " + run.string()) == 0);
    const fs::path out = dir / "eval";
    REQUIRE(run_cli("eval --checkpoint " + (run / "checkpoint.ppgb").string() + " --data " +
                    data.string() + " --task arrh --out " + out.string()) == 0);

    const json report = read_json(out / "report.json");
    REQUIRE(report["per_label"].size() == 13);
    int defined = 0, dashed = 0;
    for (const auto& row : report["per_label"]) (row["auroc"].is_null() ? dashed : defined)++;
    CHECK(defined == 5);  // the five generator rhythms
    CHECK(dashed == 8);   // never-seen classes keep the dash
    CHECK(!fs::exists(out / "roc_VTACH.svg"));
    CHECK(fs::exists(out / "roc_SR.svg"));
}

TEST_CASE("config file seeds defaults and flags override") {
    const fs::path dir = fresh_dir("config");
    const fs::path spec = dir / "spec.json";
    write_spec(spec, 6, 6, 4.0);
    const fs::path cfg = dir / "cfg.json";
    {
        std::ofstream out(cfg);
        out << json{{"spec", spec.string()}, {"out", (dir / "from_config").string()}}.dump();
    }
    REQUIRE(run_cli("--config " + cfg.string() + " synth") == 0);
    CHECK(fs::exists(dir / "from_config" / "manifest.jsonl"));

    // flag wins over the config value
    REQUIRE(run_cli("--config " + cfg.string() + " synth --out " + (dir / "flag_wins").string()) == 0);
    CHECK(fs::exists(dir / "flag_wins" / "manifest.jsonl"));

    // unknown flags and missing requireds are parse errors -> exit 2
    CHECK(run_cli("synth --nope") == 2);
    CHECK(run_cli("train --task af") == 2);
}
