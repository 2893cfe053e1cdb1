#pragma once

// Dataset ingestion and deterministic splitting. Layout on disk is one
// subdirectory per class under a root; class indices follow alphabetical
// subdirectory order.

#include <cstdint>
#include <string>
#include <vector>

#include "vitc/tensor.hpp"

namespace vitc::data {

struct Sample {
    core::TensorF pixels; // [H,W,3], values in [0,1]
    int label = 0;
    std::string source_path; // relative to the dataset root
};

struct ClassCatalog {
    std::vector<std::string> names;           // alphabetical
    std::vector<int64_t> counts;              // per-class sample counts
    int num_classes() const { return static_cast<int>(names.size()); }

    /// The 7 cooking-state classes with their published per-class counts.
    static ClassCatalog challenge() {
        return ClassCatalog{{"creamy_paste", "diced", "grated", "juiced", "jullienne", "sliced", "whole"},
                            {730, 700, 819, 638, 672, 1315, 1304}};
    }
};

/// Published total size of the challenge dataset. Note the published
/// per-class counts above sum to 6178; the two figures disagree at the
/// source, so nothing here asserts one against the other.
inline constexpr int64_t kChallengeTotalImages = 5902;

struct ListingEntry {
    std::string rel_path; // "<class>/<file>"
    int label = 0;
};

struct DatasetListing {
    std::vector<ListingEntry> entries; // ordered by (class, filename)
    ClassCatalog catalog;              // names + on-disk counts
};

/// Enumerate a dataset without decoding pixels. Stable ordering:
/// class, then filename lexicographic. Empty class directory is an error.
DatasetListing list_dataset(const std::string& root_dir);

struct LoadResult {
    std::vector<Sample> samples;
    ClassCatalog catalog;
    int skipped = 0; // unreadable files (warned and counted)
};

/// Decode every listed image (PNG/JPEG/PPM). Unreadable files produce a
/// per-file warning on stderr and are skipped. `workers` parallelizes
/// decoding only; output order is independent of it.
LoadResult load_dataset(const std::string& root_dir, int workers = 1);

/// Decode a specific set of "<class>/<file>" paths; labels come from the
/// class directory's rank in `class_names`. Order follows `rel_paths`.
std::vector<Sample> load_paths(const std::string& root_dir, const std::vector<std::string>& class_names,
                               const std::vector<std::string>& rel_paths, int workers = 1);

/// Bilinear resize with half-pixel-centered sampling; same-size input is
/// returned bit-exactly. Works on [H,W,C] for any C.
core::TensorF resize_bilinear(const core::TensorF& pixels, int out_h, int out_w);

/// Per-sample standardization over all pixels and channels:
/// (x - mean) / max(stddev, 1e-6). A constant image maps to all zeros.
core::TensorF standardize(const core::TensorF& pixels);

enum class SplitMode { Fractions, Counts };

struct SplitSpec {
    SplitMode mode = SplitMode::Fractions;
    double test_fraction = 0.15;     // fraction of all samples held out for test
    double val_from_train = 0.15;    // fraction of the remaining pool used for validation
    int64_t count_train = 0, count_val = 0, count_test = 0; // Counts mode: exact partition
    uint64_t seed = 0;
    bool stratified = true;
};

struct SplitManifest {
    SplitSpec spec;
    std::vector<std::string> train, val, test; // relative paths

    void save(const std::string& path) const;
    static SplitManifest load(const std::string& path);
};

/// Deterministic shuffle + partition of a listing. Fractions mode floors
/// split sizes and gives the remainder to train; Counts mode requires the
/// three counts to partition the listing exactly.
SplitManifest split_dataset(const DatasetListing& listing, const SplitSpec& spec);

/// Select the samples whose source_path belongs to one manifest split.
std::vector<Sample> select_split(const std::vector<Sample>& samples, const std::vector<std::string>& split_paths);

} // namespace vitc::data
