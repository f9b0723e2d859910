#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "ppgbench/dataset_io.hpp"
#include "ppgbench/errors.hpp"
#include "ppgbench/synth.hpp"

using namespace ppgbench;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("ppgbench_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

PpgSegment make_segment(const std::string& id, const std::string& subject, int fold,
                        std::size_t n_samples = 64) {
    PpgSegment seg;
    seg.segment_id = id;
    seg.subject_id = subject;
    seg.fold = fold;
    seg.samples.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) seg.samples[i] = 0.25f * static_cast<float>(i % 7);
    return seg;
}

std::uint64_t fnv1a(const std::vector<float>& values) {
    std::uint64_t h = 1469598103934665603ull;
    for (float v : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        for (int i = 0; i < 4; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace

TEST_CASE("rhythm taxonomy has exactly 26 codes and rejects strangers") {
    std::set<std::string> names;
    for (RhythmCode code : all_rhythm_codes()) {
        names.insert(std::string(to_string(code)));
        CHECK(parse_rhythm_code(to_string(code)) == code);
    }
    CHECK(names.size() == 26);
    CHECK(!parse_rhythm_code("NSR"));
    CHECK(!parse_rhythm_code(""));
    CHECK(!parse_rhythm_code("af"));
    CHECK(names.count("1AVB") == 1);
    CHECK(names.count("2AVBM1") == 1);
    CHECK(names.count("2AVBM2") == 1);
}

TEST_CASE("write then load reproduces the dataset exactly") {
    Dataset ds;
    ds.provenance = "synthetic";
    PpgSegment a = make_segment("seg-a", "subj-1", 3);
    a.rhythm = RhythmCode::AF;
    a.hr_bpm = 92.25;
    a.sbp_mmhg = 121.3;
    a.dbp_mmhg = 74.9;
    a.gender = Gender::Female;
    a.ethnicity_raw = "WHITE - RUSSIAN";
    PpgSegment b = make_segment("seg-b", "subj-2", 9, 130);
    b.rhythm = RhythmCode::SR;
    b.rr_bpm = 19.9;
    b.age_years = 64.0;
    ds.segments = {a, b};

    const fs::path dir = temp_dir("roundtrip");
    write_dataset(ds, dir);
    const Dataset loaded = load_dataset(dir);
    CHECK(loaded == ds);

    // also loadable via the manifest path itself
    const Dataset loaded2 = load_dataset(dir / "manifest.jsonl");
    CHECK(loaded2 == ds);
}

TEST_CASE("empty dataset round-trips to an empty manifest and blob") {
    Dataset ds;
    const fs::path dir = temp_dir("empty");
    write_dataset(ds, dir);
    CHECK(fs::file_size(dir / "signals.bin") == 0);
    const Dataset loaded = load_dataset(dir);
    CHECK(loaded.segments.empty());
}

TEST_CASE("10k-segment synthetic dataset round-trips with matching checksum") {
    SynthSpec spec;
    spec.seed = 7;
    spec.duration_s = 2.0;
    spec.noise_std = 0.05;
    spec.classes = {{RhythmCode::SR, 5000}, {RhythmCode::AF, 5000}};
    const Dataset ds = generate_dataset(spec);
    REQUIRE(ds.segments.size() == 10000);

    std::vector<float> all;
    for (const auto& seg : ds.segments) all.insert(all.end(), seg.samples.begin(), seg.samples.end());
    const std::uint64_t hash_before = fnv1a(all);

    const fs::path dir = temp_dir("large");
    write_dataset(ds, dir);
    const Dataset loaded = load_dataset(dir);
    REQUIRE(loaded.segments.size() == ds.segments.size());

    std::vector<float> all_after;
    for (const auto& seg : loaded.segments)
        all_after.insert(all_after.end(), seg.samples.begin(), seg.samples.end());
    CHECK(fnv1a(all_after) == hash_before);
    CHECK(loaded == ds);
    fs::remove_all(dir);
}

TEST_CASE("duplicate segment ids are rejected by name") {
    Dataset ds;
    ds.segments = {make_segment("dup", "s1", 1), make_segment("dup", "s2", 2)};
    CHECK_THROWS_WITH_AS(validate_dataset(ds), doctest::Contains("dup"), ValidationError);
}

TEST_CASE("subject split across folds is rejected") {
    Dataset ds;
    ds.segments = {make_segment("a", "subj", 1), make_segment("b", "subj", 2)};
    CHECK_THROWS_WITH_AS(validate_dataset(ds), doctest::Contains("subj"), ValidationError);
}

TEST_CASE("manifest with out-of-bounds blob offset fails with a bounds error") {
    const fs::path dir = temp_dir("bounds");
    {
        Dataset ds;
        ds.segments = {make_segment("a", "s1", 1, 16)};
        write_dataset(ds, dir);
    }
    std::ofstream manifest(dir / "manifest.jsonl", std::ios::trunc);
    manifest << R"({"segment_id":"a","subject_id":"s1","fold":1,"offset":10,"length":16,"sampling_rate_hz":125.0})"
             << "\n";
    manifest.close();
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("exceeds blob size"), ValidationError);
}

TEST_CASE("malformed manifest line is reported with its line number") {
    const fs::path dir = temp_dir("malformed");
    {
        Dataset ds;
        ds.segments = {make_segment("a", "s1", 1, 16)};
        write_dataset(ds, dir);
    }
    std::ofstream manifest(dir / "manifest.jsonl", std::ios::app);
    manifest << "{not json\n";
    manifest.close();
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("line 2"), ValidationError);
}

TEST_CASE("missing files are reported") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/path"), ValidationError);
}

TEST_CASE("non-finite samples are rejected") {
    PpgSegment seg = make_segment("a", "s", 1);
    seg.samples[3] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_WITH_AS(validate_segment(seg), doctest::Contains("non-finite"), ValidationError);
    seg.samples[3] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(validate_segment(seg), ValidationError);
}

TEST_CASE("fold outside 1..10 and short segments are rejected") {
    CHECK_THROWS_AS(validate_segment(make_segment("a", "s", 0)), ValidationError);
    CHECK_THROWS_AS(validate_segment(make_segment("a", "s", 11)), ValidationError);
    CHECK_THROWS_AS(validate_segment(make_segment("a", "s", 1, 1)), ValidationError);
}

TEST_CASE("split_folds follows the 7/1/2 protocol") {
    Dataset ds;
    for (int fold = 1; fold <= 10; ++fold)
        ds.segments.push_back(make_segment("seg" + std::to_string(fold), "subj" + std::to_string(fold), fold));
    const FoldSplit split = split_folds(ds);
    CHECK(split.train.segments.size() == 7);
    CHECK(split.validation.segments.size() == 1);
    CHECK(split.test.segments.size() == 2);
    CHECK(split.validation.segments[0].fold == 8);
}

TEST_CASE("degenerate placement: everything in fold 9 goes to test") {
    Dataset ds;
    for (int i = 0; i < 5; ++i)
        ds.segments.push_back(make_segment("seg" + std::to_string(i), "subj" + std::to_string(i), 9));
    const FoldSplit split = split_folds(ds);
    CHECK(split.train.segments.empty());
    CHECK(split.validation.segments.empty());
    CHECK(split.test.segments.size() == 5);
}

TEST_CASE("random fold assignment: split sizes equal independent fold-count sums") {
    std::mt19937 rng(11);
    Dataset ds;
    int fold_counts[11] = {0};
    for (int i = 0; i < 1000; ++i) {
        const int fold = 1 + static_cast<int>(rng() % 10);
        ds.segments.push_back(make_segment("seg" + std::to_string(i), "subj" + std::to_string(i), fold));
        fold_counts[fold]++;  // independent counting pass
    }
    const FoldSplit split = split_folds(ds);
    int train_expected = 0;
    for (int f = 1; f <= 7; ++f) train_expected += fold_counts[f];
    CHECK(split.train.segments.size() == static_cast<std::size_t>(train_expected));
    CHECK(split.validation.segments.size() == static_cast<std::size_t>(fold_counts[8]));
    CHECK(split.test.segments.size() == static_cast<std::size_t>(fold_counts[9] + fold_counts[10]));

    // partition property
    CHECK(split.train.segments.size() + split.validation.segments.size() + split.test.segments.size() ==
          ds.segments.size());
    std::set<std::string> ids;
    for (const auto* part : {&split.train, &split.validation, &split.test})
        for (const auto& seg : part->segments) CHECK(ids.insert(seg.segment_id).second);
}
