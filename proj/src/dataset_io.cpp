#include "ppgbench/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ppgbench/errors.hpp"

namespace ppgbench {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Samples are binary32 little-endian on disk regardless of host order.
static_assert(sizeof(float) == 4);

void to_little_endian(std::vector<float>& values) {
    if constexpr (std::endian::native == std::endian::big) {
        for (float& v : values) {
            uint32_t bits;
            std::memcpy(&bits, &v, 4);
            bits = __builtin_bswap32(bits);
            std::memcpy(&v, &bits, 4);
        }
    }
}

double require_number(const json& record, const char* key, int line_no) {
    if (!record.contains(key) || !record[key].is_number())
        throw ValidationError("manifest line " + std::to_string(line_no) + ": missing or non-numeric '" +
                              key + "'");
    return record[key].get<double>();
}

std::string require_string(const json& record, const char* key, int line_no) {
    if (!record.contains(key) || !record[key].is_string())
        throw ValidationError("manifest line " + std::to_string(line_no) + ": missing or non-string '" +
                              key + "'");
    return record[key].get<std::string>();
}

std::optional<double> optional_number(const json& record, const char* key, int line_no) {
    if (!record.contains(key) || record[key].is_null()) return std::nullopt;
    if (!record[key].is_number())
        throw ValidationError("manifest line " + std::to_string(line_no) + ": non-numeric '" + key + "'");
    return record[key].get<double>();
}

}  // namespace

Dataset load_dataset(const fs::path& manifest_path) {
    fs::path dir = manifest_path;
    fs::path manifest = manifest_path;
    if (fs::is_directory(manifest_path)) {
        manifest = manifest_path / "manifest.jsonl";
    } else {
        dir = manifest_path.parent_path();
    }
    if (!fs::exists(manifest))
        throw ValidationError("manifest not found: " + manifest.string());
    fs::path blob_path = dir / "signals.bin";
    if (!fs::exists(blob_path))
        throw ValidationError("signal blob not found: " + blob_path.string());

    std::ifstream blob(blob_path, std::ios::binary);
    blob.seekg(0, std::ios::end);
    const std::uint64_t blob_bytes = static_cast<std::uint64_t>(blob.tellg());
    if (blob_bytes % 4 != 0)
        throw ValidationError("signal blob size " + std::to_string(blob_bytes) + " is not a multiple of 4");
    const std::uint64_t blob_samples = blob_bytes / 4;

    Dataset dataset;
    dataset.provenance = "imported";
    fs::path sidecar = dir / "dataset.json";
    if (fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        json meta = json::parse(in, nullptr, /*allow_exceptions=*/true);
        if (meta.contains("provenance") && meta["provenance"].is_string())
            dataset.provenance = meta["provenance"].get<std::string>();
    }

    std::ifstream in(manifest);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError("manifest line " + std::to_string(line_no) + ": malformed JSON (" +
                                  e.what() + ")");
        }
        if (!record.is_object())
            throw ValidationError("manifest line " + std::to_string(line_no) + ": record is not an object");

        PpgSegment seg;
        seg.segment_id = require_string(record, "segment_id", line_no);
        seg.subject_id = require_string(record, "subject_id", line_no);
        seg.fold = static_cast<int>(require_number(record, "fold", line_no));
        seg.sampling_rate_hz = require_number(record, "sampling_rate_hz", line_no);

        const double offset_d = require_number(record, "offset", line_no);
        const double length_d = require_number(record, "length", line_no);
        if (offset_d < 0 || length_d < 0 || offset_d != std::floor(offset_d) || length_d != std::floor(length_d))
            throw ValidationError("manifest line " + std::to_string(line_no) +
                                  ": offset/length must be non-negative integers");
        const auto offset = static_cast<std::uint64_t>(offset_d);
        const auto length = static_cast<std::uint64_t>(length_d);
        if (offset + length > blob_samples)
            throw ValidationError("manifest line " + std::to_string(line_no) + ": segment '" + seg.segment_id +
                                  "' offset " + std::to_string(offset) + " + length " + std::to_string(length) +
                                  " exceeds blob size " + std::to_string(blob_samples) + " samples");

        seg.samples.resize(length);
        blob.seekg(static_cast<std::streamoff>(offset * 4), std::ios::beg);
        blob.read(reinterpret_cast<char*>(seg.samples.data()), static_cast<std::streamsize>(length * 4));
        if (!blob)
            throw ValidationError("manifest line " + std::to_string(line_no) + ": failed reading " +
                                  std::to_string(length) + " samples from blob");
        to_little_endian(seg.samples);  // involution; decodes on big-endian hosts

        if (record.contains("rhythm") && !record["rhythm"].is_null()) {
            const std::string text = require_string(record, "rhythm", line_no);
            auto code = parse_rhythm_code(text);
            if (!code)
                throw ValidationError("manifest line " + std::to_string(line_no) + ": unknown rhythm code '" +
                                      text + "'");
            seg.rhythm = *code;
        }
        if (record.contains("liu_code") && !record["liu_code"].is_null())
            seg.liu_code = static_cast<int>(require_number(record, "liu_code", line_no));

        seg.hr_bpm = optional_number(record, "hr_bpm", line_no);
        seg.rr_bpm = optional_number(record, "rr_bpm", line_no);
        seg.sbp_mmhg = optional_number(record, "sbp_mmhg", line_no);
        seg.dbp_mmhg = optional_number(record, "dbp_mmhg", line_no);
        seg.age_years = optional_number(record, "age_years", line_no);
        seg.weight_kg = optional_number(record, "weight_kg", line_no);
        seg.height_cm = optional_number(record, "height_cm", line_no);
        if (record.contains("gender") && !record["gender"].is_null()) {
            const std::string text = require_string(record, "gender", line_no);
            auto g = parse_gender(text);
            if (!g)
                throw ValidationError("manifest line " + std::to_string(line_no) + ": unknown gender '" +
                                      text + "'");
            seg.gender = *g;
        }
        if (record.contains("ethnicity_raw") && !record["ethnicity_raw"].is_null())
            seg.ethnicity_raw = require_string(record, "ethnicity_raw", line_no);

        try {
            validate_segment(seg);
        } catch (const ValidationError& e) {
            throw ValidationError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        dataset.segments.push_back(std::move(seg));
    }

    validate_dataset(dataset);
    return dataset;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
    validate_dataset(dataset);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RuntimeAbort("cannot create directory " + dir.string() + ": " + ec.message());

    std::ofstream blob(dir / "signals.bin", std::ios::binary | std::ios::trunc);
    std::ofstream manifest(dir / "manifest.jsonl", std::ios::trunc);
    if (!blob || !manifest) throw RuntimeAbort("cannot open output files in " + dir.string());

    std::uint64_t offset = 0;
    for (const PpgSegment& seg : dataset.segments) {
        json record;
        record["segment_id"] = seg.segment_id;
        record["subject_id"] = seg.subject_id;
        record["fold"] = seg.fold;
        record["offset"] = offset;
        record["length"] = seg.samples.size();
        record["sampling_rate_hz"] = seg.sampling_rate_hz;
        if (seg.rhythm) record["rhythm"] = std::string(to_string(*seg.rhythm));
        if (seg.liu_code) record["liu_code"] = *seg.liu_code;
        if (seg.hr_bpm) record["hr_bpm"] = *seg.hr_bpm;
        if (seg.rr_bpm) record["rr_bpm"] = *seg.rr_bpm;
        if (seg.sbp_mmhg) record["sbp_mmhg"] = *seg.sbp_mmhg;
        if (seg.dbp_mmhg) record["dbp_mmhg"] = *seg.dbp_mmhg;
        if (seg.age_years) record["age_years"] = *seg.age_years;
        if (seg.weight_kg) record["weight_kg"] = *seg.weight_kg;
        if (seg.height_cm) record["height_cm"] = *seg.height_cm;
        if (seg.gender) record["gender"] = std::string(to_string(*seg.gender));
        if (seg.ethnicity_raw) record["ethnicity_raw"] = *seg.ethnicity_raw;
        manifest << record.dump() << '\n';

        std::vector<float> wire = seg.samples;
        to_little_endian(wire);
        blob.write(reinterpret_cast<const char*>(wire.data()),
                   static_cast<std::streamsize>(wire.size() * 4));
        offset += seg.samples.size();
    }

    json meta;
    meta["format_version"] = kDatasetFormatVersion;
    meta["provenance"] = dataset.provenance;
    std::ofstream sidecar(dir / "dataset.json", std::ios::trunc);
    sidecar << meta.dump(2) << '\n';

    if (!blob.good() || !manifest.good() || !sidecar.good())
        throw RuntimeAbort("I/O failure writing dataset to " + dir.string());
}

FoldSplit split_folds(const Dataset& dataset) {
    FoldSplit split;
    split.train.provenance = dataset.provenance;
    split.validation.provenance = dataset.provenance;
    split.test.provenance = dataset.provenance;
    for (const PpgSegment& seg : dataset.segments) {
        if (seg.fold <= 7)
            split.train.segments.push_back(seg);
        else if (seg.fold == 8)
            split.validation.segments.push_back(seg);
        else
            split.test.segments.push_back(seg);
    }
    return split;
}

}  // namespace ppgbench
