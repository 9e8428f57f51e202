#include "hep2/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hep2 {

namespace {

const char* kClassNames[kNumClasses] = {"H", "S", "N", "C", "NM", "G"};

const ScalarFeatureKind kTriplets[kNumClasses][3] = {
    {ScalarFeatureKind::MOA, ScalarFeatureKind::ACC, ScalarFeatureKind::MP},
    {ScalarFeatureKind::HN, ScalarFeatureKind::HA, ScalarFeatureKind::EN},
    {ScalarFeatureKind::MOA, ScalarFeatureKind::AOA, ScalarFeatureKind::CC},
    {ScalarFeatureKind::MOA, ScalarFeatureKind::AOA, ScalarFeatureKind::CC},
    {ScalarFeatureKind::BAR, ScalarFeatureKind::IAR, ScalarFeatureKind::EACC},
    {ScalarFeatureKind::OAR, ScalarFeatureKind::EACC, ScalarFeatureKind::AOD},
};

// shared intermediate products for one cell
struct Workspace {
    GrayImage normalized;
    RoiSet rois;
};

Workspace make_workspace(const GrayImage& img, const BinaryImage& cell_mask,
                         const ExtractorConfig& cfg) {
    if (img.width != cell_mask.width || img.height != cell_mask.height)
        throw std::invalid_argument("extract: image and mask dimensions differ");
    Workspace ws;
    ws.normalized = rescale_to_unit(img);
    ws.rois = build_roi_set(cell_mask, cfg);
    return ws;
}

void masked_mean_var(const GrayImage& img, const BinaryImage& mask, double& mean, double& var) {
    double s = 0;
    int n = 0;
    for (size_t i = 0; i < img.pix.size(); ++i)
        if (mask.pix[i]) {
            s += img.pix[i];
            ++n;
        }
    if (n == 0) {
        mean = var = 0;
        return;
    }
    mean = s / n;
    double q = 0;
    for (size_t i = 0; i < img.pix.size(); ++i)
        if (mask.pix[i]) q += (img.pix[i] - mean) * (img.pix[i] - mean);
    var = q / n;
}

std::vector<double> class_specific_from_ws(const Workspace& ws, const ExtractorConfig& cfg) {
    const auto& grid = cfg.threshold_grid;
    std::vector<double> out;
    out.reserve(size_t(kNumClasses) * 3 * grid.size() + 2);
    for (int c = 0; c < kNumClasses; ++c) {
        GrayImage g = gamma_transform(ws.normalized, cfg.gamma[size_t(c)]);
        for (int k = 0; k < 3; ++k)
            for (double t : grid) out.push_back(compute_scalar(kTriplets[c][k], g, ws.rois, t));
    }
    double mean, var;
    masked_mean_var(ws.normalized, ws.rois.full.bits, mean, var);
    out.push_back(mean);
    out.push_back(var);
    return out;
}

std::vector<double> scalar_pool_from_ws(const Workspace& ws, const ExtractorConfig& cfg) {
    std::vector<double> out;
    out.reserve(size_t(kNumClasses) * 3 + 2);
    for (int c = 0; c < kNumClasses; ++c) {
        GrayImage g = gamma_transform(ws.normalized, cfg.gamma[size_t(c)]);
        for (int k = 0; k < 3; ++k)
            out.push_back(
                compute_scalar(kTriplets[c][k], g, ws.rois, cfg.tuned_threshold[size_t(c)]));
    }
    double mean, var;
    masked_mean_var(ws.normalized, ws.rois.full.bits, mean, var);
    out.push_back(mean);
    out.push_back(var);
    return out;
}

struct Glcm {
    double contrast = 0, correlation = 0, energy = 0, homogeneity = 0;
};

Glcm glcm_stats(const GrayImage& img, const BinaryImage& mask, int levels, int dr, int dc) {
    std::vector<double> m(size_t(levels) * size_t(levels), 0.0);
    auto quant = [&](double v) { return std::min(levels - 1, int(v * levels)); };
    double total = 0;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            int r2 = r + dr, c2 = c + dc;
            if (r2 < 0 || r2 >= img.height || c2 < 0 || c2 >= img.width) continue;
            if (!mask.at(r, c) || !mask.at(r2, c2)) continue;
            int a = quant(img.at(r, c)), b = quant(img.at(r2, c2));
            m[size_t(a) * levels + b] += 1.0;
            m[size_t(b) * levels + a] += 1.0;
            total += 2.0;
        }
    Glcm g;
    if (total == 0) return g;
    for (double& x : m) x /= total;
    double mx = 0, my = 0;
    for (int i = 0; i < levels; ++i)
        for (int j = 0; j < levels; ++j) {
            double p = m[size_t(i) * levels + j];
            g.contrast += p * (i - j) * (i - j);
            g.energy += p * p;
            g.homogeneity += p / (1.0 + std::abs(i - j));
            mx += i * p;
            my += j * p;
        }
    double sx = 0, sy = 0, sxy = 0;
    for (int i = 0; i < levels; ++i)
        for (int j = 0; j < levels; ++j) {
            double p = m[size_t(i) * levels + j];
            sx += (i - mx) * (i - mx) * p;
            sy += (j - my) * (j - my) * p;
            sxy += (i - mx) * (j - my) * p;
        }
    if (sx > 1e-12 && sy > 1e-12) g.correlation = sxy / std::sqrt(sx * sy);
    return g;
}

std::vector<double> texture_from_ws(const Workspace& ws, const ExtractorConfig& cfg) {
    const BinaryImage& mask = ws.rois.full.bits;
    const GrayImage& norm = ws.normalized;
    double lo = 1.0, hi = 0.0;
    int n = 0;
    for (size_t i = 0; i < norm.pix.size(); ++i)
        if (mask.pix[i]) {
            lo = std::min(lo, norm.pix[i]);
            hi = std::max(hi, norm.pix[i]);
            ++n;
        }
    if (n == 0) lo = hi = 0.0;
    GrayImage masked = apply_mask(norm, mask);

    const int L = cfg.texture_levels;
    // six scalars per level, scalar-major
    std::vector<double> count(size_t(L), 0.0), area(size_t(L), 0.0), hull(size_t(L), 0.0),
        ecc(size_t(L), 0.0), euler(size_t(L), 0.0), maxper(size_t(L), 0.0);
    for (int i = 0; i < L; ++i) {
        double t = L > 1 ? lo + (hi - lo) * double(i) / double(L - 1) : lo;
        BinaryImage bin = threshold_binary(masked, t);
        auto comps = label_components(bin, 8);
        count[size_t(i)] = double(comps.size());
        area[size_t(i)] = double(bin.count());
        hull[size_t(i)] = convex_hull_area(bin);
        double e = 0;
        int mp = 0;
        for (const auto& c : comps) {
            e += component_eccentricity(c);
            mp = std::max(mp, c.perimeter);
        }
        ecc[size_t(i)] = comps.empty() ? 0.0 : e / double(comps.size());
        euler[size_t(i)] = double(int(comps.size()) - count_holes(bin));
        maxper[size_t(i)] = double(mp);
    }

    std::vector<double> out;
    out.reserve(size_t(L) * 6 + 4 + 16);
    for (const auto* s : {&count, &area, &hull, &ecc, &euler, &maxper})
        out.insert(out.end(), s->begin(), s->end());

    // masked intensity statistics
    double mean, var;
    masked_mean_var(norm, mask, mean, var);
    std::vector<double> histo(size_t(cfg.entropy_bins), 0.0);
    for (size_t i = 0; i < norm.pix.size(); ++i)
        if (mask.pix[i]) {
            int b = std::min(cfg.entropy_bins - 1, int(norm.pix[i] * cfg.entropy_bins));
            histo[size_t(b)] += 1.0;
        }
    double entropy = 0;
    for (double hcount : histo)
        if (hcount > 0 && n > 0) {
            double p = hcount / n;
            entropy -= p * std::log2(p);
        }
    out.push_back(mean);
    out.push_back(std::sqrt(var));
    out.push_back(entropy);
    out.push_back(hi - lo);

    const int offs[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    for (auto& o : offs) {
        Glcm g = glcm_stats(norm, mask, cfg.glcm_levels, o[0], o[1]);
        out.push_back(g.contrast);
        out.push_back(g.correlation);
        out.push_back(g.energy);
        out.push_back(g.homogeneity);
    }
    return out;
}

} // namespace

const char* class_name(int c) {
    if (c < 0 || c >= kNumClasses) throw std::invalid_argument("class_name: bad class id");
    return kClassNames[c];
}

int class_from_name(const std::string& name) {
    for (int c = 0; c < kNumClasses; ++c)
        if (name == kClassNames[c]) return c;
    return -1;
}

const char* scalar_kind_name(ScalarFeatureKind k) {
    switch (k) {
        case ScalarFeatureKind::MOA: return "MOA";
        case ScalarFeatureKind::ACC: return "ACC";
        case ScalarFeatureKind::MP: return "MP";
        case ScalarFeatureKind::HN: return "HN";
        case ScalarFeatureKind::HA: return "HA";
        case ScalarFeatureKind::EN: return "EN";
        case ScalarFeatureKind::AOA: return "AOA";
        case ScalarFeatureKind::CC: return "CC";
        case ScalarFeatureKind::BAR: return "BAR";
        case ScalarFeatureKind::IAR: return "IAR";
        case ScalarFeatureKind::EACC: return "EACC";
        case ScalarFeatureKind::OAR: return "OAR";
        case ScalarFeatureKind::AOD: return "AOD";
        case ScalarFeatureKind::MaskedMean: return "mean";
        case ScalarFeatureKind::MaskedVariance: return "var";
    }
    return "?";
}

std::array<ScalarFeatureKind, 3> class_triplet(int class_id) {
    if (class_id < 0 || class_id >= kNumClasses)
        throw std::invalid_argument("class_triplet: bad class id");
    return {kTriplets[class_id][0], kTriplets[class_id][1], kTriplets[class_id][2]};
}

const char* feature_set_name(FeatureSetKind k) {
    switch (k) {
        case FeatureSetKind::ClassSpecific: return "cs";
        case FeatureSetKind::Texture: return "texture";
        case FeatureSetKind::Combined: return "combined";
        case FeatureSetKind::ScalarPool: return "pool";
    }
    return "?";
}

int feature_set_length(FeatureSetKind k) {
    switch (k) {
        case FeatureSetKind::ClassSpecific: return 128;
        case FeatureSetKind::Texture: return 140;
        case FeatureSetKind::Combined: return 177;
        case FeatureSetKind::ScalarPool: return 20;
    }
    return 0;
}

RoiSet build_roi_set(const BinaryImage& cell_mask, const ExtractorConfig& cfg) {
    RoiSet rs;
    rs.full = make_roi_mask(cell_mask, RoiKind::Full);
    rs.ring = make_roi_mask(cell_mask, RoiKind::Ring, cfg.k_ring);
    rs.inner = make_roi_mask(cell_mask, RoiKind::Inner, cfg.k_inner);
    rs.outer = make_roi_mask(cell_mask, RoiKind::Outer, cfg.k_outer);
    rs.aod_region = dilate_disk(cell_mask, cfg.k_outer);
    return rs;
}

double area_ratio(const BinaryImage& bin, const RoiMask& roi) {
    if (bin.width != roi.bits.width || bin.height != roi.bits.height)
        throw std::invalid_argument("area_ratio: dimension mismatch");
    int denom = roi.bits.count();
    if (denom == 0) throw std::invalid_argument("area_ratio: empty ROI");
    int num = 0;
    for (size_t i = 0; i < bin.pix.size(); ++i) num += bin.pix[i] && roi.bits.pix[i];
    return double(num) / double(denom);
}

double compute_scalar(ScalarFeatureKind kind, const GrayImage& img, const RoiSet& rois, double t) {
    using K = ScalarFeatureKind;
    switch (kind) {
        case K::MOA:
        case K::ACC:
        case K::MP:
        case K::HN:
        case K::HA:
        case K::EN:
        case K::AOA:
        case K::CC: {
            BinaryImage bin = threshold_binary(apply_mask(img, rois.full), t);
            if (kind == K::ACC) return double(bin.count());
            if (kind == K::HN) return double(count_holes(bin));
            if (kind == K::HA) return double(rois.full.bits.count() - bin.count());
            if (kind == K::EN) return double(euler_number(bin));
            auto comps = label_components(bin, 8);
            if (kind == K::CC) return double(comps.size());
            if (comps.empty()) return 0.0;
            if (kind == K::AOA) return double(bin.count()) / double(comps.size());
            int best = 0;
            for (const auto& c : comps)
                best = std::max(best, kind == K::MOA ? c.area : c.perimeter);
            return double(best);
        }
        case K::BAR:
            return area_ratio(threshold_binary(apply_mask(img, rois.ring), t), rois.ring);
        case K::IAR:
            return area_ratio(threshold_binary(apply_mask(img, rois.inner), t), rois.inner);
        case K::EACC:
            return double(threshold_binary(apply_mask(img, rois.inner), t).count());
        case K::OAR:
            return area_ratio(threshold_binary(apply_mask(img, rois.outer), t), rois.outer);
        case K::AOD:
            return average_object_distance(
                threshold_binary(apply_mask(img, rois.aod_region), t));
        case K::MaskedMean:
        case K::MaskedVariance: {
            double mean, var;
            masked_mean_var(img, rois.full.bits, mean, var);
            return kind == K::MaskedMean ? mean : var;
        }
    }
    throw std::invalid_argument("compute_scalar: unknown kind");
}

double compute_scalar(ScalarFeatureKind kind, const GrayImage& img, const BinaryImage& cell_mask,
                      double t, const ExtractorConfig& cfg) {
    if (img.width != cell_mask.width || img.height != cell_mask.height)
        throw std::invalid_argument("compute_scalar: image and mask dimensions differ");
    return compute_scalar(kind, img, build_roi_set(cell_mask, cfg), t);
}

std::vector<double> extract_class_specific_vector(const GrayImage& img,
                                                  const BinaryImage& cell_mask,
                                                  const ExtractorConfig& cfg) {
    return class_specific_from_ws(make_workspace(img, cell_mask, cfg), cfg);
}

std::vector<double> extract_texture_vector(const GrayImage& img, const BinaryImage& cell_mask,
                                           const ExtractorConfig& cfg) {
    return texture_from_ws(make_workspace(img, cell_mask, cfg), cfg);
}

std::vector<double> extract_scalar_pool_vector(const GrayImage& img, const BinaryImage& cell_mask,
                                               const ExtractorConfig& cfg) {
    return scalar_pool_from_ws(make_workspace(img, cell_mask, cfg), cfg);
}

FeatureBundle extract_bundle(const GrayImage& img, const BinaryImage& cell_mask,
                             const ExtractorConfig& cfg) {
    Workspace ws = make_workspace(img, cell_mask, cfg);
    FeatureBundle b;
    b.class_specific = class_specific_from_ws(ws, cfg);
    b.texture = texture_from_ws(ws, cfg);
    b.pool = scalar_pool_from_ws(ws, cfg);
    return b;
}

int class_specific_slot(int class_id, int triplet_pos, int threshold_idx) {
    return class_id * 21 + triplet_pos * 7 + threshold_idx;
}

int scalar_pool_slot(int class_id, int triplet_pos) { return class_id * 3 + triplet_pos; }

std::vector<double> build_combined_vector(const std::vector<double>& texture,
                                          const std::vector<double>& class_specific) {
    if (texture.size() != 140 || class_specific.size() != 128)
        throw std::invalid_argument("build_combined_vector: unexpected input lengths");
    std::vector<double> out = texture;
    // first occurrence of each kind in the class-specific layout
    const int bases[5] = {
        class_specific_slot(kNuMem, 2, 0), // EACC
        class_specific_slot(kNuMem, 0, 0), // BAR
        class_specific_slot(kGolgi, 0, 0), // OAR
        class_specific_slot(kNuMem, 1, 0), // IAR
        class_specific_slot(kGolgi, 2, 0), // AOD
    };
    for (int base : bases)
        for (int t = 0; t < 7; ++t) out.push_back(class_specific[size_t(base + t)]);
    out.push_back(class_specific[126]);
    out.push_back(class_specific[127]);
    return out;
}

std::vector<std::string> feature_labels(FeatureSetKind kind, const ExtractorConfig& cfg) {
    std::vector<std::string> out;
    auto tlab = [](double t) {
        char buf[16];
        snprintf(buf, sizeof buf, "%.2f", t);
        return std::string(buf);
    };
    switch (kind) {
        case FeatureSetKind::ClassSpecific: {
            for (int c = 0; c < kNumClasses; ++c)
                for (int k = 0; k < 3; ++k)
                    for (double t : cfg.threshold_grid)
                        out.push_back(std::string("cs_") + kClassNames[c] + "_" +
                                      scalar_kind_name(kTriplets[c][k]) + "_t" + tlab(t));
            out.push_back("cs_mean");
            out.push_back("cs_var");
            break;
        }
        case FeatureSetKind::Texture: {
            const char* names[6] = {"count", "area", "hull", "ecc", "euler", "maxperim"};
            for (const char* nm : names)
                for (int i = 0; i < cfg.texture_levels; ++i)
                    out.push_back(std::string("tx_") + nm + "_l" + std::to_string(i));
            for (const char* nm : {"mean", "std", "entropy", "range"})
                out.push_back(std::string("tx_") + nm);
            const char* offs[4] = {"0_1", "1_0", "1_1", "1_m1"};
            for (const char* o : offs)
                for (const char* st : {"contrast", "correlation", "energy", "homogeneity"})
                    out.push_back(std::string("tx_glcm_") + o + "_" + st);
            break;
        }
        case FeatureSetKind::Combined: {
            out = feature_labels(FeatureSetKind::Texture, cfg);
            const char* kinds[5] = {"EACC", "BAR", "OAR", "IAR", "AOD"};
            for (const char* k : kinds)
                for (double t : cfg.threshold_grid)
                    out.push_back(std::string("cmb_") + k + "_t" + tlab(t));
            out.push_back("cmb_mean");
            out.push_back("cmb_var");
            break;
        }
        case FeatureSetKind::ScalarPool: {
            for (int c = 0; c < kNumClasses; ++c)
                for (int k = 0; k < 3; ++k)
                    out.push_back(std::string("pool_") + kClassNames[c] + "_" +
                                  scalar_kind_name(kTriplets[c][k]));
            out.push_back("pool_mean");
            out.push_back("pool_var");
            break;
        }
    }
    return out;
}

NormalizationStats fit_zscore(const Matrix& m) {
    if (m.rows < 2) throw std::invalid_argument("fit_zscore: need at least 2 rows");
    NormalizationStats s;
    s.mean.assign(size_t(m.cols), 0.0);
    s.stdev.assign(size_t(m.cols), 0.0);
    s.constant_column.assign(size_t(m.cols), 0);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) s.mean[size_t(c)] += m.at(r, c);
    for (double& x : s.mean) x /= m.rows;
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
            double d = m.at(r, c) - s.mean[size_t(c)];
            s.stdev[size_t(c)] += d * d;
        }
    for (int c = 0; c < m.cols; ++c) {
        s.stdev[size_t(c)] = std::sqrt(s.stdev[size_t(c)] / m.rows);
        if (s.stdev[size_t(c)] < 1e-12) s.constant_column[size_t(c)] = 1;
    }
    return s;
}

std::vector<double> apply_zscore(const NormalizationStats& s, const std::vector<double>& x) {
    if (x.size() != s.mean.size()) throw std::invalid_argument("apply_zscore: length mismatch");
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        out[i] = s.constant_column[i] ? 0.0 : (x[i] - s.mean[i]) / s.stdev[i];
    return out;
}

Matrix apply_zscore(const NormalizationStats& s, const Matrix& m) {
    if (size_t(m.cols) != s.mean.size())
        throw std::invalid_argument("apply_zscore: column count mismatch");
    Matrix out(m.rows, m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            out.at(r, c) = s.constant_column[size_t(c)]
                               ? 0.0
                               : (m.at(r, c) - s.mean[size_t(c)]) / s.stdev[size_t(c)];
    return out;
}

} // namespace hep2
