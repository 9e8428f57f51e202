#ifndef HEP2_IMAGE_HPP
#define HEP2_IMAGE_HPP

#include <cstdint>
#include <utility>
#include <vector>

namespace hep2 {

/// Grayscale image with intensities in [0, 1], row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pix;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0);

    double at(int r, int c) const { return pix[size_t(r) * width + c]; }
    double& at(int r, int c) { return pix[size_t(r) * width + c]; }
    size_t size() const { return pix.size(); }
};

/// Binary image, 0 = background, 1 = foreground.
struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pix;

    BinaryImage() = default;
    BinaryImage(int w, int h, uint8_t fill = 0);

    uint8_t at(int r, int c) const { return pix[size_t(r) * width + c]; }
    uint8_t& at(int r, int c) { return pix[size_t(r) * width + c]; }
    bool fg(int r, int c) const {
        return r >= 0 && r < height && c >= 0 && c < width && at(r, c) != 0;
    }
    int count() const;
};

/// One connected foreground component.
struct Component {
    std::vector<std::pair<int, int>> pixels; // (row, col), first entry is the row-major minimum
    int area = 0;
    int perimeter = 0;
};

enum class RoiKind { Full, Ring, Inner, Outer };

/// Region-of-interest mask derived from a cell mask. `degenerate` is set when
/// the requested region came out empty and the mask fell back to Full.
struct RoiMask {
    RoiKind kind = RoiKind::Full;
    int k = 0;
    BinaryImage bits;
    bool degenerate = false;
};

// ---- preprocessing ----

/// Affinely map intensities so min -> 0 and max -> 1; a constant image maps to
/// all zeros. Throws std::invalid_argument on empty input or non-finite values.
GrayImage rescale_to_unit(const GrayImage& img);
GrayImage rescale_to_unit(int width, int height, const std::vector<double>& raw);

/// Pixel-wise power transform p^gamma. Requires gamma > 0.
GrayImage gamma_transform(const GrayImage& img, double gamma);

/// Pixel-wise product of image and mask bits. Dimensions must match.
GrayImage apply_mask(const GrayImage& img, const RoiMask& mask);
GrayImage apply_mask(const GrayImage& img, const BinaryImage& mask);

/// Foreground = intensity strictly greater than t. Requires t in [0, 1].
BinaryImage threshold_binary(const GrayImage& img, double t);

// ---- binary morphology ----

/// Connected foreground components under 4- or 8-connectivity, ordered by each
/// component's smallest pixel in row-major order. Pixel lists start at that pixel.
std::vector<Component> label_components(const BinaryImage& bin, int connectivity = 8);

/// Number of holes: background regions (4-connected, complementary to the
/// 8-connected foreground) that do not touch the image border.
int count_holes(const BinaryImage& bin);

/// Euler number = component count (8-connected) - hole count.
int euler_number(const BinaryImage& bin);

/// Boundary length of one component: number of its pixels with at least one
/// 4-neighbor that is background or off-image.
int perimeter(const Component& c, const BinaryImage& bin);

/// Disk-structuring-element morphology. The element contains all offsets with
/// dx^2 + dy^2 <= r^2. Off-image pixels count as background.
BinaryImage erode_disk(const BinaryImage& bin, int r);
BinaryImage dilate_disk(const BinaryImage& bin, int r);

/// Build a region-of-interest mask from a cell mask:
///   Full      the mask itself
///   Ring(k)   dilate(ceil(k/2)) minus erode(floor(k/2))
///   Inner(k)  erode(k)
///   Outer(k)  dilate(k) minus mask
/// An empty result falls back to Full with `degenerate` set. Requires k >= 0
/// and a non-empty cell mask.
RoiMask make_roi_mask(const BinaryImage& cell_mask, RoiKind kind, int k = 0);

/// Mean over foreground pixels of the distance to the nearest image edge,
/// measured as min(row, col, height-1-row, width-1-col). 0 when empty.
double average_object_distance(const BinaryImage& bin);

// ---- component geometry helpers ----

/// Eccentricity of the ellipse with matching second-order central moments,
/// in [0, 1]. A component with zero spread (single pixel) gives 0.
double component_eccentricity(const Component& c);

/// Area of the convex hull of all foreground pixel centers (shoelace formula).
/// Fewer than three non-collinear pixels give 0.
double convex_hull_area(const BinaryImage& bin);

} // namespace hep2

#endif
