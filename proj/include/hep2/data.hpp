#ifndef HEP2_DATA_HPP
#define HEP2_DATA_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hep2/eval.hpp"
#include "hep2/features.hpp"
#include "hep2/image.hpp"
#include "hep2/parallel.hpp"

namespace hep2 {

/// One cropped cell: image, its region-of-interest mask, and ground truth.
struct CellRecord {
    std::string id;
    int label = -1;
    bool intermediate = false;
    GrayImage image;
    BinaryImage mask;
};

struct DatasetManifest {
    std::vector<CellRecord> records;
    std::vector<std::string> errors; // per-record load problems, with ids

    std::vector<int> class_counts() const;
};

/// Read `gt.csv` (id,label,intensity) plus `<id>.png` / `<id>_mask.png`
/// pairs from a directory. Invalid records are skipped and reported in
/// `errors`; only a missing or unreadable gt.csv throws.
DatasetManifest load_dataset(const std::string& root);

// ---- synthetic phantoms ----

struct PhantomSpec {
    int per_class = 200;
    double intermediate_fraction = 0.5;
    int size = 70;
    uint64_t seed = 7;
    double background = 0.02;
    double noise = 0.03;
    double intermediate_noise_scale = 1.5;
    double intermediate_contrast = 0.35;
};

/// Deterministically generate per-class phantom cells whose structure
/// matches each staining pattern's defining traits.
DatasetManifest generate_phantoms(const PhantomSpec& spec);

/// Write records as 16-bit grayscale PNGs plus gt.csv into `dir`.
void save_dataset(const std::string& dir, const DatasetManifest& manifest);

// ---- extraction ----

/// Run the extractor over every record (optionally in parallel).
ExtractedDataset extract_dataset(const std::vector<CellRecord>& records,
                                 const ExtractorConfig& cfg, Exec policy = Exec::Serial);

/// CSV with id, label columns followed by the labeled feature columns.
void export_features_csv(std::ostream& os, const ExtractedDataset& ds, FeatureSetKind kind);

// ---- model persistence ----

/// Write a trained framework into `dir`: manifest.json plus one file per
/// SVM block or tree ensemble.
void save_model(const std::string& dir, const TrainedFramework& tf);

/// Inverse of save_model; throws on missing files, version mismatch, or
/// corrupt content.
TrainedFramework load_model(const std::string& dir);

} // namespace hep2

#endif
