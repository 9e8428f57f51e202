#include "hep2/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hep2 {

namespace {

void check_dims(int w, int h) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("image: dimensions must be positive");
}

std::vector<std::pair<int, int>> disk_offsets(int r) {
    std::vector<std::pair<int, int>> out;
    for (int dr = -r; dr <= r; ++dr)
        for (int dc = -r; dc <= r; ++dc)
            if (dr * dr + dc * dc <= r * r) out.emplace_back(dr, dc);
    return out;
}

} // namespace

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
    check_dims(w, h);
    pix.assign(size_t(w) * size_t(h), fill);
}

BinaryImage::BinaryImage(int w, int h, uint8_t fill) : width(w), height(h) {
    check_dims(w, h);
    pix.assign(size_t(w) * size_t(h), fill);
}

int BinaryImage::count() const {
    int n = 0;
    for (uint8_t p : pix) n += p != 0;
    return n;
}

GrayImage rescale_to_unit(int width, int height, const std::vector<double>& raw) {
    check_dims(width, height);
    if (raw.size() != size_t(width) * size_t(height))
        throw std::invalid_argument("rescale_to_unit: pixel count does not match dimensions");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double p : raw) {
        if (!std::isfinite(p)) throw std::invalid_argument("rescale_to_unit: non-finite intensity");
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    GrayImage out(width, height);
    if (hi > lo) {
        double span = hi - lo;
        for (size_t i = 0; i < raw.size(); ++i) out.pix[i] = (raw[i] - lo) / span;
    }
    return out;
}

GrayImage rescale_to_unit(const GrayImage& img) {
    return rescale_to_unit(img.width, img.height, img.pix);
}

GrayImage gamma_transform(const GrayImage& img, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("gamma_transform: gamma must be positive and finite");
    GrayImage out = img;
    for (double& p : out.pix) p = std::pow(p, gamma);
    return out;
}

GrayImage apply_mask(const GrayImage& img, const BinaryImage& mask) {
    if (img.width != mask.width || img.height != mask.height)
        throw std::invalid_argument("apply_mask: dimension mismatch");
    GrayImage out = img;
    for (size_t i = 0; i < out.pix.size(); ++i)
        if (!mask.pix[i]) out.pix[i] = 0.0;
    return out;
}

GrayImage apply_mask(const GrayImage& img, const RoiMask& mask) {
    return apply_mask(img, mask.bits);
}

BinaryImage threshold_binary(const GrayImage& img, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("threshold_binary: t outside [0, 1]");
    BinaryImage out(img.width, img.height);
    for (size_t i = 0; i < img.pix.size(); ++i) out.pix[i] = img.pix[i] > t ? 1 : 0;
    return out;
}

std::vector<Component> label_components(const BinaryImage& bin, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("label_components: connectivity must be 4 or 8");
    const int w = bin.width, h = bin.height;
    std::vector<Component> out;
    std::vector<uint8_t> seen(bin.pix.size(), 0);
    static const int dr8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static const int dc8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static const int dr4[] = {-1, 0, 0, 1};
    static const int dc4[] = {0, -1, 1, 0};
    const int* dr = connectivity == 8 ? dr8 : dr4;
    const int* dc = connectivity == 8 ? dc8 : dc4;
    const int nk = connectivity;

    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            size_t i = size_t(r) * w + c;
            if (!bin.pix[i] || seen[i]) continue;
            Component comp;
            seen[i] = 1;
            stack.assign(1, {r, c});
            while (!stack.empty()) {
                auto [pr, pc] = stack.back();
                stack.pop_back();
                comp.pixels.emplace_back(pr, pc);
                for (int k = 0; k < nk; ++k) {
                    int nr = pr + dr[k], nc = pc + dc[k];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                    size_t ni = size_t(nr) * w + nc;
                    if (bin.pix[ni] && !seen[ni]) {
                        seen[ni] = 1;
                        stack.emplace_back(nr, nc);
                    }
                }
            }
            comp.area = int(comp.pixels.size());
            comp.perimeter = perimeter(comp, bin);
            out.push_back(std::move(comp));
        }
    }
    return out;
}

int count_holes(const BinaryImage& bin) {
    const int w = bin.width, h = bin.height;
    // background connectivity is 4, complementary to 8-connected foreground
    std::vector<uint8_t> seen(bin.pix.size(), 0);
    std::vector<std::pair<int, int>> stack;
    auto flood = [&](int r0, int c0) {
        seen[size_t(r0) * w + c0] = 1;
        stack.assign(1, {r0, c0});
        while (!stack.empty()) {
            auto [r, c] = stack.back();
            stack.pop_back();
            const int nr[] = {r - 1, r + 1, r, r};
            const int nc[] = {c, c, c - 1, c + 1};
            for (int k = 0; k < 4; ++k) {
                if (nr[k] < 0 || nr[k] >= h || nc[k] < 0 || nc[k] >= w) continue;
                size_t ni = size_t(nr[k]) * w + nc[k];
                if (!bin.pix[ni] && !seen[ni]) {
                    seen[ni] = 1;
                    stack.emplace_back(nr[k], nc[k]);
                }
            }
        }
    };
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if ((r == 0 || r == h - 1 || c == 0 || c == w - 1) && !bin.at(r, c) &&
                !seen[size_t(r) * w + c])
                flood(r, c);
    int holes = 0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (!bin.at(r, c) && !seen[size_t(r) * w + c]) {
                ++holes;
                flood(r, c);
            }
    return holes;
}

int euler_number(const BinaryImage& bin) {
    return int(label_components(bin, 8).size()) - count_holes(bin);
}

int perimeter(const Component& c, const BinaryImage& bin) {
    int p = 0;
    for (auto [r, cc] : c.pixels) {
        bool boundary = !bin.fg(r - 1, cc) || !bin.fg(r + 1, cc) || !bin.fg(r, cc - 1) ||
                        !bin.fg(r, cc + 1);
        p += boundary;
    }
    return p;
}

BinaryImage erode_disk(const BinaryImage& bin, int r) {
    if (r < 0) throw std::invalid_argument("erode_disk: radius must be >= 0");
    if (r == 0) return bin;
    auto offs = disk_offsets(r);
    BinaryImage out(bin.width, bin.height);
    for (int y = 0; y < bin.height; ++y)
        for (int x = 0; x < bin.width; ++x) {
            bool keep = bin.at(y, x) != 0;
            for (size_t k = 0; keep && k < offs.size(); ++k)
                keep = bin.fg(y + offs[k].first, x + offs[k].second);
            out.at(y, x) = keep ? 1 : 0;
        }
    return out;
}

BinaryImage dilate_disk(const BinaryImage& bin, int r) {
    if (r < 0) throw std::invalid_argument("dilate_disk: radius must be >= 0");
    if (r == 0) return bin;
    auto offs = disk_offsets(r);
    BinaryImage out(bin.width, bin.height);
    for (int y = 0; y < bin.height; ++y)
        for (int x = 0; x < bin.width; ++x) {
            bool hit = false;
            for (size_t k = 0; !hit && k < offs.size(); ++k)
                hit = bin.fg(y + offs[k].first, x + offs[k].second);
            out.at(y, x) = hit ? 1 : 0;
        }
    return out;
}

RoiMask make_roi_mask(const BinaryImage& cell_mask, RoiKind kind, int k) {
    if (cell_mask.count() == 0) throw std::invalid_argument("make_roi_mask: empty cell mask");
    if (k < 0) throw std::invalid_argument("make_roi_mask: k must be >= 0");
    RoiMask roi;
    roi.kind = kind;
    roi.k = k;
    switch (kind) {
        case RoiKind::Full:
            roi.bits = cell_mask;
            break;
        case RoiKind::Ring: {
            BinaryImage grown = dilate_disk(cell_mask, (k + 1) / 2);
            BinaryImage shrunk = erode_disk(cell_mask, k / 2);
            roi.bits = grown;
            for (size_t i = 0; i < roi.bits.pix.size(); ++i)
                if (shrunk.pix[i]) roi.bits.pix[i] = 0;
            break;
        }
        case RoiKind::Inner:
            roi.bits = erode_disk(cell_mask, k);
            break;
        case RoiKind::Outer: {
            roi.bits = dilate_disk(cell_mask, k);
            for (size_t i = 0; i < roi.bits.pix.size(); ++i)
                if (cell_mask.pix[i]) roi.bits.pix[i] = 0;
            break;
        }
    }
    if (roi.bits.count() == 0) {
        roi.bits = cell_mask;
        roi.degenerate = true;
    }
    return roi;
}

double average_object_distance(const BinaryImage& bin) {
    long long sum = 0;
    int n = 0;
    for (int r = 0; r < bin.height; ++r)
        for (int c = 0; c < bin.width; ++c)
            if (bin.at(r, c)) {
                sum += std::min(std::min(r, c), std::min(bin.height - 1 - r, bin.width - 1 - c));
                ++n;
            }
    return n == 0 ? 0.0 : double(sum) / n;
}

double component_eccentricity(const Component& c) {
    if (c.pixels.size() < 2) return 0.0;
    double n = double(c.pixels.size());
    double mr = 0, mc = 0;
    for (auto [r, cc] : c.pixels) {
        mr += r;
        mc += cc;
    }
    mr /= n;
    mc /= n;
    double u20 = 0, u02 = 0, u11 = 0;
    for (auto [r, cc] : c.pixels) {
        u20 += (r - mr) * (r - mr);
        u02 += (cc - mc) * (cc - mc);
        u11 += (r - mr) * (cc - mc);
    }
    double tr = u20 + u02;
    double det = std::sqrt((u20 - u02) * (u20 - u02) + 4.0 * u11 * u11);
    double l1 = (tr + det) / 2.0, l2 = (tr - det) / 2.0;
    if (l1 <= 0.0) return 0.0;
    double ratio = std::max(0.0, l2 / l1);
    return std::sqrt(1.0 - ratio);
}

double convex_hull_area(const BinaryImage& bin) {
    std::vector<std::pair<int, int>> pts; // (x, y)
    for (int r = 0; r < bin.height; ++r)
        for (int c = 0; c < bin.width; ++c)
            if (bin.at(r, c)) pts.emplace_back(c, r);
    if (pts.size() < 3) return 0.0;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto cross = [](const std::pair<int, int>& o, const std::pair<int, int>& a,
                    const std::pair<int, int>& b) {
        return (long long)(a.first - o.first) * (b.second - o.second) -
               (long long)(a.second - o.second) * (b.first - o.first);
    };
    std::vector<std::pair<int, int>> hull(2 * pts.size());
    size_t k = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    size_t lower = k + 1;
    for (size_t i = pts.size() - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k > 1 ? k - 1 : 0);
    if (hull.size() < 3) return 0.0;
    long long twice = 0;
    for (size_t i = 0; i < hull.size(); ++i) {
        auto [x1, y1] = hull[i];
        auto [x2, y2] = hull[(i + 1) % hull.size()];
        twice += (long long)x1 * y2 - (long long)x2 * y1;
    }
    return std::abs(double(twice)) / 2.0;
}

} // namespace hep2
