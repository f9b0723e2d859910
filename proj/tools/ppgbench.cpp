// ppgbench: synthesize, preprocess, train, evaluate, stratify, and
// externally validate PPG clinical-prediction baselines.
#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppgbench/dataset_io.hpp"
#include "ppgbench/dsp.hpp"
#include "ppgbench/errors.hpp"
#include "ppgbench/metrics.hpp"
#include "ppgbench/model.hpp"
#include "ppgbench/report.hpp"
#include "ppgbench/strata.hpp"
#include "ppgbench/synth.hpp"
#include "ppgbench/tasks.hpp"
#include "ppgbench/train.hpp"

namespace {

using nlohmann::json;
using namespace ppgbench;
namespace fs = std::filesystem;

json g_file_config = json::object();

template <typename T>
void cfg_default(const char* key, T& value) {
    if (g_file_config.contains(key)) value = g_file_config[key].get<T>();
}

std::string default_out_dir() {
    const char* env = std::getenv("PPGBENCH_OUT_DIR");
    return env ? env : "";
}

json fixtures_json() {
    return json::array({kRhythmMappingFixtureVersion, kEthnicityFixtureVersion});
}

void write_run_meta(const fs::path& dir) {
    json meta;
    meta["created_unix_time"] = static_cast<long long>(std::time(nullptr));
    write_text_file(dir / "run_meta.json", meta.dump(2) + "\n");
}

Dataset load_maybe_clean(const std::string& data_path, bool apply_clean) {
    Dataset ds = load_dataset(data_path);
    if (apply_clean) {
        for (PpgSegment& seg : ds.segments) seg = clean(seg);
    }
    return ds;
}

TaskSpec task_from_flag(const std::string& text) {
    auto kind = parse_task_kind(text);
    if (!kind) throw ValidationError("unknown task '" + text + "' (AF, SAA, ARRH, REG_HR, REG_RR, REG_BP)");
    return make_task_spec(*kind);
}

struct TrainFlags {
    std::string task, data, out = default_out_dir();
    double lr = 0.001;
    int epochs = 50;
    int effective_batch = 512;
    int micro_batch = 32;
    double weight_decay = 0.01;
    std::uint64_t seed = 0;
    bool no_clean = false;
    std::string selection;  // empty -> task default
};

json resolved_train_config(const TrainFlags& f) {
    json cfg;
    cfg["task"] = f.task;
    cfg["data"] = f.data;
    cfg["out"] = f.out;
    cfg["lr"] = f.lr;
    cfg["epochs"] = f.epochs;
    cfg["effective_batch"] = f.effective_batch;
    cfg["micro_batch"] = f.micro_batch;
    cfg["weight_decay"] = f.weight_decay;
    cfg["seed"] = f.seed;
    cfg["no_clean"] = f.no_clean;
    cfg["selection"] = f.selection;
    return cfg;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    if (out_dir.empty()) throw ValidationError("synth: --out required (or set PPGBENCH_OUT_DIR)");
    SynthSpec spec = load_synth_spec(spec_path);
    Dataset ds = generate_dataset(spec);
    write_dataset(ds, out_dir);

    std::map<std::string, int> counts;
    for (const auto& seg : ds.segments) counts[std::string(to_string(*seg.rhythm))]++;
    std::cout << "wrote " << ds.segments.size() << " segments to " << out_dir << "\n";
    for (const auto& [name, count] : counts) std::cout << "  " << name << ": " << count << "\n";
    return 0;
}

int cmd_preprocess(const std::string& data_path, const std::string& out_dir) {
    if (out_dir.empty()) throw ValidationError("preprocess: --out required (or set PPGBENCH_OUT_DIR)");
    Dataset ds = load_maybe_clean(data_path, true);
    write_dataset(ds, out_dir);
    std::cout << "cleaned " << ds.segments.size() << " segments into " << out_dir << "\n";
    return 0;
}

int cmd_train(const TrainFlags& f) {
    if (f.out.empty()) throw ValidationError("train: --out required (or set PPGBENCH_OUT_DIR)");
    const TaskSpec task = task_from_flag(f.task);

    Dataset ds = load_maybe_clean(f.data, !f.no_clean);
    const FoldSplit split = split_folds(ds);
    const auto train_set = build_task_dataset(split.train, task);
    const auto val_set = build_task_dataset(split.validation, task);
    if (train_set.empty())
        throw ValidationError("empty task dataset: no training segment carries the labels task " +
                              f.task + " needs");
    if (val_set.empty()) throw ValidationError("empty task dataset: validation fold has no labeled segments");

    TrainConfig config;
    config.learning_rate = f.lr;
    config.epochs = f.epochs;
    config.effective_batch = f.effective_batch;
    config.micro_batch = f.micro_batch;
    config.weight_decay = f.weight_decay;
    config.seed = f.seed;
    config.selection_metric = default_selection_metric(task.kind);
    if (!f.selection.empty()) {
        if (f.selection == "macro_auroc")
            config.selection_metric = SelectionMetric::MacroAuroc;
        else if (f.selection == "neg_mae")
            config.selection_metric = SelectionMetric::NegMae;
        else
            throw ValidationError("unknown selection metric '" + f.selection + "'");
    }

    auto [model, history] = train(config, task, train_set, val_set);

    fs::create_directories(f.out);
    json hist;
    hist["selected_epoch"] = history.selected_epoch;
    json epochs = json::array();
    for (const auto& e : history.epochs)
        epochs.push_back({{"train_loss", e.train_loss}, {"val_metric", e.val_metric}});
    hist["epochs"] = epochs;

    json meta;
    meta["task"] = std::string(to_string(task.kind));
    meta["run_config"] = resolved_train_config(f);
    meta["history"] = hist;
    meta["tool_version"] = kToolVersion;
    meta["fixtures"] = fixtures_json();
    save_checkpoint(fs::path(f.out) / "checkpoint.ppgb", model, meta);
    write_text_file(fs::path(f.out) / "history.json", meta.dump(2) + "\n");
    write_run_meta(f.out);

    std::cout << "trained " << to_string(task.kind) << " for " << f.epochs << " epochs; selected epoch "
              << history.selected_epoch << "; checkpoint in " << f.out << "\n";
    return 0;
}

struct EvalFlags {
    std::string checkpoint, data, task, out = default_out_dir();
    std::string split = "test";  // test | validation | train | all
    std::string stratify;
    int min_per_class = kDefaultMinPerClass;
    bool no_clean = false;
    bool with_baseline = true;
};

Dataset pick_split(const Dataset& ds, const std::string& which) {
    if (which == "all") return ds;
    FoldSplit split = split_folds(ds);
    if (which == "test") return split.test;
    if (which == "validation") return split.validation;
    if (which == "train") return split.train;
    throw ValidationError("unknown --split '" + which + "'");
}

void emit_plots(const fs::path& out_dir, const TaskSpec& task, const std::vector<TaskSample>& samples,
                const Matrix& scores) {
    if (is_classification(task.kind)) {
        for (std::size_t j = 0; j < static_cast<std::size_t>(task.output_dim); ++j) {
            std::vector<double> s(samples.size());
            std::vector<int> y(samples.size());
            std::size_t n_pos = 0;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                s[i] = scores.at(i, j);
                y[i] = samples[i].target[j] > 0.5 ? 1 : 0;
                n_pos += static_cast<std::size_t>(y[i]);
            }
            if (n_pos == 0 || n_pos == samples.size()) continue;  // dash: no curve for one-class labels
            std::string fname = "roc_" + task.output_names[j] + ".svg";
            std::replace(fname.begin(), fname.end(), '+', '_');
            write_text_file(out_dir / fname, roc_svg(s, y, task.output_names[j]));
        }
    } else {
        for (std::size_t j = 0; j < static_cast<std::size_t>(task.output_dim); ++j) {
            std::vector<double> p(samples.size()), r(samples.size());
            for (std::size_t i = 0; i < samples.size(); ++i) {
                p[i] = scores.at(i, j);
                r[i] = samples[i].target[j];
            }
            write_text_file(out_dir / ("bland_altman_" + task.output_names[j] + ".svg"),
                            bland_altman_svg(p, r, task.output_names[j]));
        }
    }
}

int cmd_eval(const EvalFlags& f) {
    if (f.out.empty()) throw ValidationError("eval: --out required (or set PPGBENCH_OUT_DIR)");
    const TaskSpec task = task_from_flag(f.task);
    Checkpoint ckpt = load_checkpoint(f.checkpoint);
    if (ckpt.model.output_dim != task.output_dim)
        throw ValidationError("checkpoint output_dim " + std::to_string(ckpt.model.output_dim) +
                              " does not match task " + f.task + " dim " + std::to_string(task.output_dim));

    Dataset full = load_maybe_clean(f.data, !f.no_clean);
    Dataset ds = pick_split(full, f.split);
    const auto samples = build_task_dataset(ds, task);
    if (samples.empty()) throw ValidationError("eval: no labeled segments for task " + f.task +
                                               " in split '" + f.split + "'");

    std::vector<PpgSegment> segments;
    segments.reserve(samples.size());
    for (const auto& s : samples) segments.push_back(s.segment);
    const Matrix scores = predict(ckpt.model, segments, task);

    Matrix targets(samples.size(), static_cast<std::size_t>(task.output_dim));
    for (std::size_t i = 0; i < samples.size(); ++i)
        std::copy(samples[i].target.begin(), samples[i].target.end(),
                  targets.data.begin() + i * targets.cols);

    EvalReport report = evaluate(task, scores, targets);

    if (!is_classification(task.kind) && f.with_baseline) {
        // Median of the training folds' targets, evaluated on this split.
        const auto train_samples = build_task_dataset(split_folds(full).train, task);
        if (!train_samples.empty()) {
            for (std::size_t j = 0; j < static_cast<std::size_t>(task.output_dim); ++j) {
                std::vector<double> train_targets(train_samples.size());
                for (std::size_t i = 0; i < train_samples.size(); ++i)
                    train_targets[i] = train_samples[i].target[j];
                const double med = median_baseline(train_targets);
                std::vector<double> p(samples.size(), med), r(samples.size());
                for (std::size_t i = 0; i < samples.size(); ++i) r[i] = samples[i].target[j];
                const BlandAltman ba = bland_altman(p, r);
                report.baseline_regression.push_back(
                    {task.output_names[j], mae(p, r), ba.bias, ba.loa_low, ba.loa_high});
            }
        }
    }

    json provenance;
    provenance["run_config"] = {{"checkpoint", f.checkpoint}, {"data", f.data},   {"task", f.task},
                                {"split", f.split},           {"stratify", f.stratify},
                                {"min_per_class", f.min_per_class}, {"no_clean", f.no_clean}};
    provenance["tool_version"] = kToolVersion;
    provenance["fixtures"] = fixtures_json();
    provenance["checkpoint_metadata"] = ckpt.metadata;

    fs::create_directories(f.out);
    write_text_file(fs::path(f.out) / "report.json", report_to_json(report, provenance).dump(2) + "\n");
    write_text_file(fs::path(f.out) / "report.csv", report_to_csv(report));
    emit_plots(f.out, task, samples, scores);

    if (!f.stratify.empty()) {
        auto strat = parse_stratifier(f.stratify);
        if (!strat) throw ValidationError("unknown stratifier '" + f.stratify + "'");
        const auto strata = stratified_evaluate(task, scores, segments, *strat, f.min_per_class);
        write_text_file(fs::path(f.out) / ("strata_" + f.stratify + ".json"),
                        strata_to_json(strata, provenance).dump(2) + "\n");
    }
    write_run_meta(f.out);

    if (report.macro_auroc) std::cout << "macro AUROC: " << *report.macro_auroc << "\n";
    for (const auto& rm : report.regression) std::cout << rm.name << " MAE: " << rm.mae << "\n";
    std::cout << "report written to " << f.out << "\n";
    return 0;
}

struct ExternalFlags {
    std::string checkpoint, data, task, out = default_out_dir();
    bool resample = false;
    bool no_clean = false;
};

int cmd_external(const ExternalFlags& f) {
    if (f.out.empty()) throw ValidationError("external: --out required (or set PPGBENCH_OUT_DIR)");
    const TaskSpec task = task_from_flag(f.task);
    if (!is_classification(task.kind))
        throw ValidationError("external validation applies to classification tasks only");
    Checkpoint ckpt = load_checkpoint(f.checkpoint);
    if (ckpt.model.output_dim != task.output_dim)
        throw ValidationError("checkpoint output_dim " + std::to_string(ckpt.model.output_dim) +
                              " does not match task " + f.task);

    Dataset ds = load_dataset(f.data);
    bool any_liu = false;
    for (const auto& seg : ds.segments) any_liu = any_liu || seg.liu_code.has_value();
    if (!any_liu) throw ValidationError("external: dataset carries no liu_code labels");

    if (f.resample) {
        for (PpgSegment& seg : ds.segments) {
            if (seg.sampling_rate_hz == 125.0) continue;
            std::vector<double> x(seg.samples.begin(), seg.samples.end());
            std::vector<double> y = resample_linear(x, seg.sampling_rate_hz, 125.0);
            seg.samples.assign(y.begin(), y.end());
            seg.sampling_rate_hz = 125.0;
        }
    }
    if (!f.no_clean) {
        for (PpgSegment& seg : ds.segments) seg = clean(seg);
    }

    const auto samples = build_task_dataset(ds, task, /*use_external_labels=*/true);
    if (samples.empty())
        throw ValidationError("external: no segments remain after exclusions (PVC/PAC map to Excluded)");

    std::vector<PpgSegment> segments;
    segments.reserve(samples.size());
    for (const auto& s : samples) segments.push_back(s.segment);
    const Matrix scores = predict(ckpt.model, segments, task);

    Matrix targets(samples.size(), static_cast<std::size_t>(task.output_dim));
    for (std::size_t i = 0; i < samples.size(); ++i)
        std::copy(samples[i].target.begin(), samples[i].target.end(),
                  targets.data.begin() + i * targets.cols);
    const EvalReport report = evaluate(task, scores, targets);

    json provenance;
    provenance["run_config"] = {{"checkpoint", f.checkpoint},
                                {"data", f.data},
                                {"task", f.task},
                                {"resample", f.resample},
                                {"no_clean", f.no_clean},
                                {"external", true}};
    provenance["tool_version"] = kToolVersion;
    provenance["fixtures"] = fixtures_json();
    provenance["checkpoint_metadata"] = ckpt.metadata;

    fs::create_directories(f.out);
    write_text_file(fs::path(f.out) / "report.json", report_to_json(report, provenance).dump(2) + "\n");
    write_text_file(fs::path(f.out) / "report.csv", report_to_csv(report));
    emit_plots(f.out, task, samples, scores);
    write_run_meta(f.out);

    if (report.macro_auroc) std::cout << "external macro AUROC: " << *report.macro_auroc << "\n";
    std::cout << "report written to " << f.out << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_file) {
    std::ostringstream md;
    md << "# ppgbench summary\n";
    for (const std::string& path : inputs) {
        std::ifstream in(path);
        if (!in) throw ValidationError("report: cannot open " + path);
        json doc = json::parse(in, nullptr, true);
        md << "\n## " << path << "\n\n";
        if (doc.contains("per_label")) {
            md << "| label | n_pos | n_neg | AUROC | sens@spec>=0.8 | spec@sens>=0.8 |\n";
            md << "|---|---|---|---|---|---|\n";
            for (const auto& row : doc["per_label"]) {
                auto cell = [&row](const char* key) {
                    return row[key].is_null() ? std::string("-") : row[key].dump();
                };
                md << "| " << row["label"].get<std::string>() << " | " << row["n_pos"] << " | "
                   << row["n_neg"] << " | " << cell("auroc") << " | " << cell("sens_at_spec80") << " | "
                   << cell("spec_at_sens80") << " |\n";
            }
            if (doc.contains("macro_auroc") && !doc["macro_auroc"].is_null())
                md << "\nmacro AUROC: " << doc["macro_auroc"].dump() << "\n";
        }
        if (doc.contains("regression")) {
            md << "| output | MAE | bias | LoA low | LoA high |\n|---|---|---|---|---|\n";
            for (const auto& row : doc["regression"])
                md << "| " << row["name"].get<std::string>() << " | " << row["mae"] << " | " << row["bias"]
                   << " | " << row["loa_low"] << " | " << row["loa_high"] << " |\n";
            if (doc.contains("baseline_regression")) {
                for (const auto& row : doc["baseline_regression"])
                    md << "| " << row["name"].get<std::string>() << " (baseline) | " << row["mae"] << " | "
                       << row["bias"] << " | " << row["loa_low"] << " | " << row["loa_high"] << " |\n";
            }
        }
    }
    if (out_file.empty()) {
        std::cout << md.str();
    } else {
        write_text_file(out_file, md.str());
        std::cout << "summary written to " << out_file << "\n";
    }
    return 0;
}

void emit_error(const char* type, const std::string& message) {
    json err;
    err["error"] = {{"type", type}, {"message", message}};
    std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    // The config file seeds defaults; explicit flags override.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            std::ifstream in(argv[i + 1]);
            if (!in) {
                emit_error("validation", std::string("cannot open config file ") + argv[i + 1]);
                return 2;
            }
            try {
                g_file_config = json::parse(in);
            } catch (const json::parse_error& e) {
                emit_error("validation", std::string("config file: ") + e.what());
                return 2;
            }
        }
    }

    CLI::App app{"PPG clinical-prediction benchmark toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values");

    std::string synth_spec, synth_out = default_out_dir();
    cfg_default("spec", synth_spec);
    cfg_default("out", synth_out);
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset from a JSON spec");
    synth->add_option("--spec", synth_spec, "synth spec JSON")->required(g_file_config.value("spec", "").empty());
    synth->add_option("--out", synth_out, "output dataset directory");

    std::string pre_data, pre_out = default_out_dir();
    cfg_default("data", pre_data);
    auto* pre = app.add_subcommand("preprocess", "band-pass clean a dataset");
    pre->add_option("--data", pre_data, "dataset directory")->required(g_file_config.value("data", "").empty());
    pre->add_option("--out", pre_out, "output dataset directory");

    TrainFlags tf;
    cfg_default("task", tf.task);
    cfg_default("data", tf.data);
    cfg_default("out", tf.out);
    cfg_default("lr", tf.lr);
    cfg_default("epochs", tf.epochs);
    cfg_default("effective_batch", tf.effective_batch);
    cfg_default("micro_batch", tf.micro_batch);
    cfg_default("weight_decay", tf.weight_decay);
    cfg_default("seed", tf.seed);
    cfg_default("no_clean", tf.no_clean);
    cfg_default("selection", tf.selection);
    auto* tr = app.add_subcommand("train", "train the baseline model on a task");
    tr->add_option("--task", tf.task)->required(g_file_config.value("task", "").empty());
    tr->add_option("--data", tf.data)->required(g_file_config.value("data", "").empty());
    tr->add_option("--out", tf.out);
    tr->add_option("--lr", tf.lr);
    tr->add_option("--epochs", tf.epochs);
    tr->add_option("--effective-batch", tf.effective_batch);
    tr->add_option("--micro-batch", tf.micro_batch);
    tr->add_option("--weight-decay", tf.weight_decay);
    tr->add_option("--seed", tf.seed);
    tr->add_flag("--no-clean", tf.no_clean, "skip the band-pass cleaning step");
    tr->add_option("--selection-metric", tf.selection, "macro_auroc | neg_mae");

    EvalFlags ef;
    cfg_default("checkpoint", ef.checkpoint);
    cfg_default("data", ef.data);
    cfg_default("task", ef.task);
    cfg_default("out", ef.out);
    cfg_default("split", ef.split);
    cfg_default("stratify", ef.stratify);
    cfg_default("min_per_class", ef.min_per_class);
    cfg_default("no_clean", ef.no_clean);
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint; reports, ROC/Bland-Altman plots");
    ev->add_option("--checkpoint", ef.checkpoint)->required(g_file_config.value("checkpoint", "").empty());
    ev->add_option("--data", ef.data)->required(g_file_config.value("data", "").empty());
    ev->add_option("--task", ef.task)->required(g_file_config.value("task", "").empty());
    ev->add_option("--out", ef.out);
    ev->add_option("--split", ef.split, "test | validation | train | all");
    ev->add_option("--stratify", ef.stratify, "bp | hr | bmi | ethnicity | gender");
    ev->add_option("--min-per-class", ef.min_per_class);
    ev->add_flag("--no-clean", ef.no_clean);

    EvalFlags sf;  // strata = eval with a required stratifier
    sf.checkpoint = ef.checkpoint;
    sf.data = ef.data;
    sf.task = ef.task;
    sf.out = ef.out;
    sf.split = ef.split;
    sf.stratify = ef.stratify;
    sf.min_per_class = ef.min_per_class;
    auto* st = app.add_subcommand("strata", "stratified evaluation across clinical subgroups");
    st->add_option("--checkpoint", sf.checkpoint)->required(g_file_config.value("checkpoint", "").empty());
    st->add_option("--data", sf.data)->required(g_file_config.value("data", "").empty());
    st->add_option("--task", sf.task)->required(g_file_config.value("task", "").empty());
    st->add_option("--out", sf.out);
    st->add_option("--split", sf.split);
    st->add_option("--stratify", sf.stratify)->required(g_file_config.value("stratify", "").empty());
    st->add_option("--min-per-class", sf.min_per_class);
    st->add_flag("--no-clean", sf.no_clean);

    ExternalFlags xf;
    cfg_default("checkpoint", xf.checkpoint);
    cfg_default("data", xf.data);
    cfg_default("task", xf.task);
    cfg_default("out", xf.out);
    cfg_default("resample", xf.resample);
    cfg_default("no_clean", xf.no_clean);
    auto* ex = app.add_subcommand("external", "variable-length inference on an external-label dataset");
    ex->add_option("--checkpoint", xf.checkpoint)->required(g_file_config.value("checkpoint", "").empty());
    ex->add_option("--data", xf.data)->required(g_file_config.value("data", "").empty());
    ex->add_option("--task", xf.task)->required(g_file_config.value("task", "").empty());
    ex->add_option("--out", xf.out);
    ex->add_flag("--resample", xf.resample, "resample segments to 125 Hz before inference");
    ex->add_flag("--no-clean", xf.no_clean);

    std::vector<std::string> report_inputs;
    std::string report_out;
    auto* rp = app.add_subcommand("report", "combine report JSONs into a markdown summary");
    rp->add_option("--input", report_inputs, "report.json files")->required();
    rp->add_option("--out", report_out, "output markdown file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_spec, synth_out);
        if (pre->parsed()) return cmd_preprocess(pre_data, pre_out);
        if (tr->parsed()) return cmd_train(tf);
        if (ev->parsed()) return cmd_eval(ef);
        if (st->parsed()) {
            if (sf.stratify.empty()) throw ValidationError("strata: --stratify required");
            return cmd_eval(sf);
        }
        if (ex->parsed()) return cmd_external(xf);
        if (rp->parsed()) return cmd_report(report_inputs, report_out);
    } catch (const ValidationError& e) {
        emit_error("validation", e.what());
        return 2;
    } catch (const RuntimeAbort& e) {
        emit_error("runtime", e.what());
        return 3;
    } catch (const std::exception& e) {
        emit_error("runtime", e.what());
        return 3;
    }
    return 0;
}
