#ifndef HEP2_FEATURES_HPP
#define HEP2_FEATURES_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hep2/image.hpp"
#include "hep2/matrix.hpp"

namespace hep2 {

/// Staining pattern classes, in fixed report order.
enum ClassId : int { kHomogeneous = 0, kSpeckled, kNucleolar, kCentromere, kNuMem, kGolgi };
constexpr int kNumClasses = 6;
const char* class_name(int c);
int class_from_name(const std::string& name); // -1 when unknown

enum class ScalarFeatureKind {
    MOA,  // maximal object area
    ACC,  // area covered by cell (foreground count)
    MP,   // maximal object perimeter
    HN,   // hole number
    HA,   // hole area (background count inside the cell mask)
    EN,   // Euler number
    AOA,  // average object area
    CC,   // connected component count
    BAR,  // boundary area ratio (ring ROI)
    IAR,  // inner area ratio
    EACC, // area covered inside the eroded mask
    OAR,  // outer area ratio
    AOD,  // average object distance to the image edge
    MaskedMean,
    MaskedVariance,
};
const char* scalar_kind_name(ScalarFeatureKind k);

/// Per-class scalar triplet used by the class-specific layout.
std::array<ScalarFeatureKind, 3> class_triplet(int class_id);

enum class FeatureSetKind { ClassSpecific, Texture, Combined, ScalarPool };
const char* feature_set_name(FeatureSetKind k);
int feature_set_length(FeatureSetKind k);

struct ExtractorConfig {
    std::array<double, kNumClasses> gamma{1.2, 1.2, 1.2, 1.2, 1.2, 1.2};
    std::array<double, kNumClasses> tuned_threshold{0.45, 0.45, 0.45, 0.45, 0.45, 0.45};
    std::vector<double> threshold_grid{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    int k_ring = 5;
    int k_inner = 5;
    int k_outer = 10;
    int texture_levels = 20;
    int entropy_bins = 32;
    int glcm_levels = 8;
};

/// All ROI masks derived from one cell mask. `aod_region` is the mask dilated
/// by k_outer; it bounds the region AOD looks at so that structures just
/// outside the cell still register.
struct RoiSet {
    RoiMask full, ring, inner, outer;
    BinaryImage aod_region;
};
RoiSet build_roi_set(const BinaryImage& cell_mask, const ExtractorConfig& cfg);

/// Foreground fraction of `bin` within `roi`. Throws when the ROI is empty.
double area_ratio(const BinaryImage& bin, const RoiMask& roi);

/// One scalar feature at threshold t. `img` must already be rescaled to [0, 1]
/// and gamma-transformed for the class the scalar is computed for; the ROI
/// masking that each kind needs happens inside. MaskedMean / MaskedVariance
/// ignore t and read the intensities of `img` directly under the cell mask.
double compute_scalar(ScalarFeatureKind kind, const GrayImage& img, const BinaryImage& cell_mask,
                      double t, const ExtractorConfig& cfg);
double compute_scalar(ScalarFeatureKind kind, const GrayImage& img, const RoiSet& rois, double t);

/// 128 values: 6 class triplets x 3 scalars x 7 grid thresholds, then the
/// masked mean and variance. Slot (c, k, t) sits at c*21 + k*7 + t.
std::vector<double> extract_class_specific_vector(const GrayImage& img,
                                                  const BinaryImage& cell_mask,
                                                  const ExtractorConfig& cfg);

/// 140 values: 6 morphological scalars at 20 relative threshold levels, 4
/// masked intensity statistics, and 4 GLCM statistics at 4 offsets.
std::vector<double> extract_texture_vector(const GrayImage& img, const BinaryImage& cell_mask,
                                           const ExtractorConfig& cfg);

/// 177 values: the texture vector, the EACC/BAR/OAR/IAR/AOD grid slots of the
/// class-specific layout, and the masked mean and variance.
std::vector<double> build_combined_vector(const std::vector<double>& texture,
                                          const std::vector<double>& class_specific);

/// 20 values: each class triplet at that class's tuned (gamma, threshold),
/// then the masked mean and variance. Used by the cascade sub-blocks.
std::vector<double> extract_scalar_pool_vector(const GrayImage& img, const BinaryImage& cell_mask,
                                               const ExtractorConfig& cfg);

/// Column index of scalar k of class c at grid threshold t in the class-specific layout.
int class_specific_slot(int class_id, int triplet_pos, int threshold_idx);
/// Column index of class c's triplet position k in the scalar-pool layout.
int scalar_pool_slot(int class_id, int triplet_pos);

std::vector<std::string> feature_labels(FeatureSetKind kind, const ExtractorConfig& cfg);

/// All per-cell vectors extracted in one pass; combined is assembled on demand.
struct FeatureBundle {
    std::vector<double> class_specific;
    std::vector<double> texture;
    std::vector<double> pool;
};
FeatureBundle extract_bundle(const GrayImage& img, const BinaryImage& cell_mask,
                             const ExtractorConfig& cfg);

// ---- normalization ----

struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> stdev;             // population standard deviation
    std::vector<uint8_t> constant_column;  // stdev below 1e-12
};

/// Column-wise mean and population standard deviation. Requires >= 2 rows.
NormalizationStats fit_zscore(const Matrix& m);

/// (x - mean) / stdev per column; constant columns map to 0.
std::vector<double> apply_zscore(const NormalizationStats& s, const std::vector<double>& x);
Matrix apply_zscore(const NormalizationStats& s, const Matrix& m);

} // namespace hep2

#endif
