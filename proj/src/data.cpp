#include "hep2/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "json.hpp"

#include "hep2/rng.hpp"
#include "hep2/svm.hpp"
#include "hep2/trees.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace hep2 {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    return out;
}

bool read_gray_png(const std::string& path, GrayImage& out, std::string& err) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) {
        err = "cannot read " + path;
        return false;
    }
    if (m.channels() != 1) {
        err = path + ": expected single-channel grayscale";
        return false;
    }
    double scale;
    if (m.depth() == CV_8U)
        scale = 255.0;
    else if (m.depth() == CV_16U)
        scale = 65535.0;
    else {
        err = path + ": unsupported bit depth";
        return false;
    }
    out = GrayImage(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
            double v = m.depth() == CV_8U ? double(m.at<uint8_t>(r, c)) : double(m.at<uint16_t>(r, c));
            out.at(r, c) = v / scale;
        }
    return true;
}

bool read_mask_png(const std::string& path, BinaryImage& out, std::string& err) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) {
        err = "cannot read " + path;
        return false;
    }
    if (m.channels() != 1) {
        err = path + ": expected single-channel mask";
        return false;
    }
    out = BinaryImage(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
            double v = m.depth() == CV_8U    ? double(m.at<uint8_t>(r, c))
                       : m.depth() == CV_16U ? double(m.at<uint16_t>(r, c))
                                             : 0.0;
            out.at(r, c) = v > 0 ? 1 : 0;
        }
    return true;
}

// ---- phantom drawing ----

void draw_disk(GrayImage& img, double cy, double cx, double r, double val) {
    const double r2 = r * r;
    int y0 = std::max(0, int(std::floor(cy - r)));
    int y1 = std::min(img.height - 1, int(std::ceil(cy + r)));
    int x0 = std::max(0, int(std::floor(cx - r)));
    int x1 = std::min(img.width - 1, int(std::ceil(cx + r)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dy = y - cy, dx = x - cx;
            if (dy * dy + dx * dx <= r2) img.at(y, x) = val;
        }
}

BinaryImage disk_mask(int size, double cy, double cx, double r) {
    BinaryImage m(size, size);
    const double r2 = r * r;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double dy = y - cy, dx = x - cx;
            m.at(y, x) = dy * dy + dx * dx <= r2 ? 1 : 0;
        }
    return m;
}

struct Placement {
    double y, x, r;
};

// rejection-sample disk centers inside radius `region_r` around the mask
// center, keeping `gap` clearance between placed disks
std::vector<Placement> place_disks(Rng& rng, double cy, double cx, double region_r, int count,
                                   double rmin, double rmax, double gap, int max_attempts) {
    std::vector<Placement> placed;
    int attempts = 0;
    while (int(placed.size()) < count && attempts < max_attempts) {
        ++attempts;
        double pr = rng.uniform(rmin, rmax);
        double reach = region_r - pr;
        if (reach <= 0) continue;
        double theta = rng.uniform(0.0, 2.0 * kPi);
        double d = std::sqrt(rng.uniform(0.0, 1.0)) * reach;
        double py = cy + d * std::sin(theta);
        double px = cx + d * std::cos(theta);
        bool ok = true;
        for (const Placement& q : placed) {
            double dy = py - q.y, dx = px - q.x;
            if (std::sqrt(dy * dy + dx * dx) < pr + q.r + gap) {
                ok = false;
                break;
            }
        }
        if (ok) placed.push_back({py, px, pr});
    }
    return placed;
}

// jittered lattice placement: guarantees large counts with a floor on the
// center-to-center separation
std::vector<Placement> place_lattice(Rng& rng, double cy, double cx, double region_r, int count,
                                     double rmin, double rmax, double spacing, double jitter) {
    std::vector<Placement> cands;
    int span = int(region_r / spacing) + 1;
    for (int i = -span; i <= span; ++i)
        for (int j = -span; j <= span; ++j) {
            double py = cy + i * spacing;
            double px = cx + j * spacing;
            double dy = py - cy, dx = px - cx;
            if (std::sqrt(dy * dy + dx * dx) <= region_r - jitter) cands.push_back({py, px, 0});
        }
    std::vector<int> order(cands.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    rng.shuffle(order);
    std::vector<Placement> placed;
    for (int idx : order) {
        if (int(placed.size()) >= count) break;
        Placement p = cands[size_t(idx)];
        p.y += rng.uniform(-jitter, jitter);
        p.x += rng.uniform(-jitter, jitter);
        p.r = rng.uniform(rmin, rmax);
        placed.push_back(p);
    }
    return placed;
}

CellRecord make_phantom(int cls, bool intermediate, const PhantomSpec& spec, uint64_t seed) {
    Rng rng(seed);
    const int sz = spec.size;
    const double half = sz / 2.0;
    const double cy = half + rng.uniform(-2.0, 2.0);
    const double cx = half + rng.uniform(-2.0, 2.0);
    const double r =
        cls == kGolgi ? rng.uniform(16.0, 19.0) : rng.uniform(22.0, 26.0);

    GrayImage img(sz, sz, spec.background);
    switch (cls) {
        case kHomogeneous:
            draw_disk(img, cy, cx, r, 0.9);
            break;
        case kSpeckled: {
            draw_disk(img, cy, cx, r, 0.9);
            int holes = rng.uniform_int(5, 10);
            for (const Placement& p :
                 place_disks(rng, cy, cx, r - 2.0, holes, 2.0, 3.5, 2.0, 500))
                draw_disk(img, p.y, p.x, p.r, 0.12);
            break;
        }
        case kNucleolar: {
            draw_disk(img, cy, cx, r, 0.2);
            int blobs = rng.uniform_int(2, 5);
            for (const Placement& p :
                 place_disks(rng, cy, cx, r - 1.5, blobs, 3.5, 5.5, 2.0, 500))
                draw_disk(img, p.y, p.x, p.r, 0.97);
            break;
        }
        case kCentromere: {
            draw_disk(img, cy, cx, r, 0.12);
            int n = rng.uniform_int(40, 60);
            for (const Placement& p :
                 place_lattice(rng, cy, cx, r - 2.5, n, 1.0, 1.4, 4.2, 0.3))
                draw_disk(img, p.y, p.x, p.r, 0.9);
            break;
        }
        case kNuMem:
            // bright annulus hugging the outside of the mask boundary
            draw_disk(img, cy, cx, r + 3.0, 0.9);
            draw_disk(img, cy, cx, r, 0.15);
            break;
        case kGolgi: {
            draw_disk(img, cy, cx, r, 0.1);
            int blobs = rng.uniform_int(3, 8);
            double theta0 = rng.uniform(0.0, 2.0 * kPi);
            for (int b = 0; b < blobs; ++b) {
                double br = rng.uniform(2.5, 3.5);
                double theta = theta0 + rng.uniform(-kPi / 3.0, kPi / 3.0);
                double d = r + br + rng.uniform(3.5, 5.5);
                draw_disk(img, cy + d * std::sin(theta), cx + d * std::cos(theta), br, 0.85);
            }
            break;
        }
        default: throw std::invalid_argument("make_phantom: bad class");
    }

    if (intermediate)
        for (double& v : img.pix)
            v = spec.background + (v - spec.background) * spec.intermediate_contrast;
    const double sigma = spec.noise * (intermediate ? spec.intermediate_noise_scale : 1.0);
    for (double& v : img.pix) v = std::clamp(v + rng.normal() * sigma, 0.0, 1.0);

    CellRecord rec;
    char buf[32];
    snprintf(buf, sizeof buf, "%s_%04d", class_name(cls), 0); // index patched by caller
    rec.id = buf;
    rec.label = cls;
    rec.intermediate = intermediate;
    rec.image = std::move(img);
    rec.mask = disk_mask(sz, cy, cx, r);
    return rec;
}

} // namespace

std::vector<int> DatasetManifest::class_counts() const {
    std::vector<int> counts(size_t(kNumClasses), 0);
    for (const CellRecord& r : records)
        if (r.label >= 0 && r.label < kNumClasses) ++counts[size_t(r.label)];
    return counts;
}

DatasetManifest load_dataset(const std::string& root) {
    const fs::path dir(root);
    std::ifstream gt(dir / "gt.csv");
    if (!gt) throw std::runtime_error("load_dataset: cannot open " + (dir / "gt.csv").string());

    DatasetManifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(gt, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (lineno == 1 && fields.size() >= 2 && fields[0] == "id") continue; // header
        if (fields.size() != 3) {
            m.errors.push_back("gt.csv line " + std::to_string(lineno) + ": expected 3 fields");
            continue;
        }
        const std::string& id = fields[0];
        int label = class_from_name(fields[1]);
        if (label < 0) {
            m.errors.push_back(id + ": unknown label '" + fields[1] + "'");
            continue;
        }
        bool intermediate;
        if (fields[2] == "positive")
            intermediate = false;
        else if (fields[2] == "intermediate")
            intermediate = true;
        else {
            m.errors.push_back(id + ": unknown intensity '" + fields[2] + "'");
            continue;
        }
        CellRecord rec;
        rec.id = id;
        rec.label = label;
        rec.intermediate = intermediate;
        std::string err;
        if (!read_gray_png((dir / (id + ".png")).string(), rec.image, err)) {
            m.errors.push_back(id + ": " + err);
            continue;
        }
        if (!read_mask_png((dir / (id + "_mask.png")).string(), rec.mask, err)) {
            m.errors.push_back(id + ": " + err);
            continue;
        }
        if (rec.mask.height != rec.image.height || rec.mask.width != rec.image.width) {
            m.errors.push_back(id + ": image and mask dimensions differ");
            continue;
        }
        if (rec.mask.count() == 0) {
            m.errors.push_back(id + ": empty mask");
            continue;
        }
        m.records.push_back(std::move(rec));
    }
    return m;
}

DatasetManifest generate_phantoms(const PhantomSpec& spec) {
    if (spec.per_class <= 0 || spec.size < 48)
        throw std::invalid_argument("generate_phantoms: bad spec");
    DatasetManifest m;
    Rng master(spec.seed);
    const int n_int = int(std::llround(spec.per_class * spec.intermediate_fraction));
    for (int cls = 0; cls < kNumClasses; ++cls) {
        for (int i = 0; i < spec.per_class; ++i) {
            const bool intermediate = i >= spec.per_class - n_int;
            uint64_t seed = master.next_u64();
            CellRecord rec = make_phantom(cls, intermediate, spec, seed);
            char buf[32];
            snprintf(buf, sizeof buf, "%s_%04d", class_name(cls), i);
            rec.id = buf;
            m.records.push_back(std::move(rec));
        }
    }
    return m;
}

void save_dataset(const std::string& dir, const DatasetManifest& manifest) {
    fs::create_directories(dir);
    std::ofstream gt(fs::path(dir) / "gt.csv");
    if (!gt) throw std::runtime_error("save_dataset: cannot write gt.csv in " + dir);
    gt << "id,label,intensity\n";
    for (const CellRecord& rec : manifest.records) {
        cv::Mat img(rec.image.height, rec.image.width, CV_16UC1);
        for (int r = 0; r < img.rows; ++r)
            for (int c = 0; c < img.cols; ++c)
                img.at<uint16_t>(r, c) =
                    uint16_t(std::llround(std::clamp(rec.image.at(r, c), 0.0, 1.0) * 65535.0));
        cv::Mat msk(rec.mask.height, rec.mask.width, CV_8UC1);
        for (int r = 0; r < msk.rows; ++r)
            for (int c = 0; c < msk.cols; ++c)
                msk.at<uint8_t>(r, c) = rec.mask.at(r, c) ? 255 : 0;
        if (!cv::imwrite((fs::path(dir) / (rec.id + ".png")).string(), img) ||
            !cv::imwrite((fs::path(dir) / (rec.id + "_mask.png")).string(), msk))
            throw std::runtime_error("save_dataset: cannot write images for " + rec.id);
        gt << rec.id << "," << class_name(rec.label) << ","
           << (rec.intermediate ? "intermediate" : "positive") << "\n";
    }
}

ExtractedDataset extract_dataset(const std::vector<CellRecord>& records,
                                 const ExtractorConfig& cfg, Exec policy) {
    ExtractedDataset ds;
    ds.config = cfg;
    const int n = int(records.size());
    ds.ids.resize(size_t(n));
    ds.labels.resize(size_t(n));
    ds.intermediate.resize(size_t(n));
    ds.bundles.resize(size_t(n));
    parallel_for(n, policy, [&](int i) {
        const CellRecord& r = records[size_t(i)];
        ds.ids[size_t(i)] = r.id;
        ds.labels[size_t(i)] = r.label;
        ds.intermediate[size_t(i)] = r.intermediate ? 1 : 0;
        ds.bundles[size_t(i)] = extract_bundle(r.image, r.mask, cfg);
    });
    return ds;
}

void export_features_csv(std::ostream& os, const ExtractedDataset& ds, FeatureSetKind kind) {
    auto labels = feature_labels(kind, ds.config);
    os << "id,label";
    for (const auto& l : labels) os << "," << l;
    os << "\n";
    char buf[32];
    Matrix m = feature_matrix(ds, kind);
    for (int r = 0; r < m.rows; ++r) {
        os << ds.ids[size_t(r)] << "," << class_name(ds.labels[size_t(r)]);
        for (int c = 0; c < m.cols; ++c) {
            snprintf(buf, sizeof buf, "%.9g", m.at(r, c));
            os << "," << buf;
        }
        os << "\n";
    }
}

// ---- model persistence ----

namespace {

json norm_to_json(const NormalizationStats& s) {
    json j;
    j["mean"] = s.mean;
    j["stdev"] = s.stdev;
    j["constant"] = s.constant_column;
    return j;
}

NormalizationStats norm_from_json(const json& j) {
    NormalizationStats s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stdev = j.at("stdev").get<std::vector<double>>();
    s.constant_column = j.at("constant").get<std::vector<uint8_t>>();
    return s;
}

json tuning_to_json(const GridSearchResult& g) {
    return json{{"c", g.c}, {"gamma", g.gamma}, {"val_accuracy", g.val_accuracy}};
}

GridSearchResult tuning_from_json(const json& j) {
    GridSearchResult g;
    g.c = j.at("c").get<double>();
    g.gamma = j.at("gamma").get<double>();
    g.val_accuracy = j.at("val_accuracy").get<double>();
    return g;
}

void save_svm_file(const fs::path& p, const SvmModel& m) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("save_model: cannot write " + p.string());
    save_svm(os, m);
}

SvmModel load_svm_file(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw std::runtime_error("load_model: cannot read " + p.string());
    return load_svm(is);
}

std::string pair_file(const char* prefix, int a, int b) {
    return std::string(prefix) + "_" + std::to_string(a) + "_" + std::to_string(b) + ".svm";
}

} // namespace

void save_model(const std::string& dir, const TrainedFramework& tf) {
    fs::create_directories(dir);
    const fs::path root(dir);
    json j;
    j["format_version"] = 1;
    j["framework"] = framework_kind_name(tf.spec.kind);
    j["resolver"] = resolver_kind_name(tf.model.resolver);
    j["features"] = feature_set_name(tf.spec.features);
    j["config"] = {{"gamma", tf.spec.grid.gamma_values},
                   {"c", tf.spec.grid.c_values},
                   {"tol", tf.spec.grid.tol}};
    if (!tf.first_norm.mean.empty()) j["first_norm"] = norm_to_json(tf.first_norm);
    if (!tf.second_norm.mean.empty()) j["second_norm"] = norm_to_json(tf.second_norm);
    if (!tf.oob_curve.empty()) j["oob_curve"] = tf.oob_curve;

    const FrameworkModel& m = tf.model;
    switch (tf.spec.kind) {
        case FrameworkKind::OneVsOne: {
            json blocks = json::array();
            for (const PairBlock& b : m.pair_blocks) {
                blocks.push_back({{"a", b.a},
                                  {"b", b.b},
                                  {"file", pair_file("ovo", b.a, b.b)},
                                  {"tuning", tuning_to_json(b.tuning)}});
                save_svm_file(root / pair_file("ovo", b.a, b.b), b.model);
            }
            j["pair_blocks"] = blocks;
            break;
        }
        case FrameworkKind::OneVsRest: {
            json blocks = json::array();
            for (int i = 0; i < int(m.rest_blocks.size()); ++i) {
                std::string f = "rest_" + std::to_string(i) + ".svm";
                blocks.push_back(
                    {{"class", i}, {"file", f}, {"tuning", tuning_to_json(m.rest_tuning[size_t(i)])}});
                save_svm_file(root / f, m.rest_blocks[size_t(i)]);
            }
            j["rest_blocks"] = blocks;
            break;
        }
        case FrameworkKind::HierCascade:
        case FrameworkKind::HierCommon: {
            json blocks = json::array();
            for (const VerificationBlock& vb : m.hier_blocks) {
                json subs = json::array();
                for (const SubBlock& sb : vb.subs) {
                    std::string f = pair_file("hier", vb.owner, sb.opponent);
                    subs.push_back({{"opponent", sb.opponent},
                                    {"file", f},
                                    {"subset", sb.subset},
                                    {"tuning", tuning_to_json(sb.tuning)},
                                    {"val_balanced_accuracy", sb.val_balanced_accuracy}});
                    save_svm_file(root / f, sb.model);
                }
                blocks.push_back({{"owner", vb.owner}, {"subs", subs}});
            }
            j["hier_blocks"] = blocks;
            break;
        }
        case FrameworkKind::TreeEnsemble: {
            j["ensemble"] = ensemble_kind_name(m.ensemble.kind);
            std::ofstream os(root / "ensemble.txt");
            if (!os) throw std::runtime_error("save_model: cannot write ensemble.txt");
            save_ensemble(os, m.ensemble);
            break;
        }
    }
    if (!m.second_stage.empty()) {
        json blocks = json::array();
        for (const PairBlock& b : m.second_stage) {
            blocks.push_back({{"a", b.a},
                              {"b", b.b},
                              {"file", pair_file("second", b.a, b.b)},
                              {"tuning", tuning_to_json(b.tuning)}});
            save_svm_file(root / pair_file("second", b.a, b.b), b.model);
        }
        j["second_stage"] = blocks;
    }
    std::ofstream os(root / "manifest.json");
    if (!os) throw std::runtime_error("save_model: cannot write manifest.json in " + dir);
    os << j.dump(2) << "\n";
}

TrainedFramework load_model(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream is(root / "manifest.json");
    if (!is) throw std::runtime_error("load_model: cannot read " + (root / "manifest.json").string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("load_model: corrupt manifest: ") + e.what());
    }
    if (j.value("format_version", -1) != 1)
        throw std::runtime_error("load_model: unsupported format version");

    TrainedFramework tf;
    const std::string fw = j.at("framework").get<std::string>();
    const std::string rs = j.at("resolver").get<std::string>();
    const std::string fe = j.at("features").get<std::string>();
    bool found = false;
    for (FrameworkKind k : {FrameworkKind::OneVsOne, FrameworkKind::OneVsRest,
                            FrameworkKind::HierCascade, FrameworkKind::HierCommon,
                            FrameworkKind::TreeEnsemble})
        if (fw == framework_kind_name(k)) {
            tf.spec.kind = k;
            found = true;
        }
    if (!found) throw std::runtime_error("load_model: unknown framework '" + fw + "'");
    found = false;
    for (ResolverKind k : {ResolverKind::None, ResolverKind::SvmScore, ResolverKind::AvgSvmScore,
                           ResolverKind::PairwiseBlocks})
        if (rs == resolver_kind_name(k)) {
            tf.spec.resolver = k;
            found = true;
        }
    if (!found) throw std::runtime_error("load_model: unknown resolver '" + rs + "'");
    found = false;
    for (FeatureSetKind k : {FeatureSetKind::ClassSpecific, FeatureSetKind::Texture,
                             FeatureSetKind::Combined, FeatureSetKind::ScalarPool})
        if (fe == feature_set_name(k)) {
            tf.spec.features = k;
            found = true;
        }
    if (!found) throw std::runtime_error("load_model: unknown feature set '" + fe + "'");

    tf.spec.grid.c_values = j.at("config").at("c").get<std::vector<double>>();
    tf.spec.grid.gamma_values = j.at("config").at("gamma").get<std::vector<double>>();
    tf.spec.grid.tol = j.at("config").at("tol").get<double>();
    if (j.contains("first_norm")) tf.first_norm = norm_from_json(j.at("first_norm"));
    if (j.contains("second_norm")) tf.second_norm = norm_from_json(j.at("second_norm"));
    if (j.contains("oob_curve")) tf.oob_curve = j.at("oob_curve").get<std::vector<double>>();

    FrameworkModel& m = tf.model;
    m.kind = tf.spec.kind;
    m.resolver = tf.spec.resolver;
    try {
        switch (tf.spec.kind) {
            case FrameworkKind::OneVsOne:
                for (const json& b : j.at("pair_blocks")) {
                    PairBlock pb;
                    pb.a = b.at("a").get<int>();
                    pb.b = b.at("b").get<int>();
                    pb.tuning = tuning_from_json(b.at("tuning"));
                    pb.model = load_svm_file(root / b.at("file").get<std::string>());
                    m.pair_blocks.push_back(std::move(pb));
                }
                break;
            case FrameworkKind::OneVsRest:
                m.rest_blocks.resize(size_t(kNumClasses));
                m.rest_tuning.resize(size_t(kNumClasses));
                for (const json& b : j.at("rest_blocks")) {
                    int c = b.at("class").get<int>();
                    if (c < 0 || c >= kNumClasses)
                        throw std::runtime_error("load_model: bad block class");
                    m.rest_tuning[size_t(c)] = tuning_from_json(b.at("tuning"));
                    m.rest_blocks[size_t(c)] = load_svm_file(root / b.at("file").get<std::string>());
                }
                break;
            case FrameworkKind::HierCascade:
            case FrameworkKind::HierCommon:
                for (const json& vb : j.at("hier_blocks")) {
                    VerificationBlock blk;
                    blk.owner = vb.at("owner").get<int>();
                    for (const json& sb : vb.at("subs")) {
                        SubBlock sub;
                        sub.opponent = sb.at("opponent").get<int>();
                        sub.subset = sb.at("subset").get<std::vector<int>>();
                        sub.tuning = tuning_from_json(sb.at("tuning"));
                        sub.val_balanced_accuracy = sb.at("val_balanced_accuracy").get<double>();
                        sub.model = load_svm_file(root / sb.at("file").get<std::string>());
                        blk.subs.push_back(std::move(sub));
                    }
                    m.hier_blocks.push_back(std::move(blk));
                }
                break;
            case FrameworkKind::TreeEnsemble: {
                std::ifstream es(root / "ensemble.txt");
                if (!es) throw std::runtime_error("load_model: cannot read ensemble.txt");
                m.ensemble = load_ensemble(es);
                break;
            }
        }
        if (j.contains("second_stage"))
            for (const json& b : j.at("second_stage")) {
                PairBlock pb;
                pb.a = b.at("a").get<int>();
                pb.b = b.at("b").get<int>();
                pb.tuning = tuning_from_json(b.at("tuning"));
                pb.model = load_svm_file(root / b.at("file").get<std::string>());
                m.second_stage.push_back(std::move(pb));
            }
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("load_model: corrupt manifest: ") + e.what());
    }
    return tf;
}

} // namespace hep2
