#pragma once

#include <filesystem>

#include "ppgbench/segment.hpp"

namespace ppgbench {

// On-disk layout of a dataset directory:
//   manifest.jsonl  one JSON object per segment: segment_id, subject_id, fold,
//                   offset, length, sampling_rate_hz, plus optional label and
//                   demographic keys. offset/length count samples, not bytes.
//   signals.bin     concatenated IEEE-754 binary32 little-endian samples.
//   dataset.json    sidecar with format_version and provenance.
inline constexpr int kDatasetFormatVersion = 1;

struct FoldSplit {
    Dataset train;       // folds 1..7
    Dataset validation;  // fold 8
    Dataset test;        // folds 9..10
};

// manifest_path may be the dataset directory or the manifest.jsonl inside it.
Dataset load_dataset(const std::filesystem::path& manifest_path);

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

FoldSplit split_folds(const Dataset& dataset);

}  // namespace ppgbench
