#include "hep2/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>

#include "hep2/rng.hpp"

namespace hep2 {

namespace {

std::vector<double> bundle_vector(const FeatureBundle& b, FeatureSetKind kind) {
    switch (kind) {
        case FeatureSetKind::ClassSpecific: return b.class_specific;
        case FeatureSetKind::Texture: return b.texture;
        case FeatureSetKind::Combined: return build_combined_vector(b.texture, b.class_specific);
        case FeatureSetKind::ScalarPool: return b.pool;
    }
    throw std::invalid_argument("bundle_vector: bad kind");
}

FeatureSetKind first_stage_kind(const FrameworkSpec& spec) {
    return spec.kind == FrameworkKind::HierCascade ? FeatureSetKind::ScalarPool : spec.features;
}

std::vector<int> subset_of(const std::vector<int>& v, const std::vector<int>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(v[size_t(i)]);
    return out;
}

void require_all_classes(const std::vector<int>& y, const char* split_name) {
    std::vector<int> counts(size_t(kNumClasses), 0);
    for (int v : y) ++counts[size_t(v)];
    for (int c = 0; c < kNumClasses; ++c)
        if (counts[size_t(c)] == 0)
            throw std::invalid_argument(std::string("experiment: class ") + class_name(ClassId(c)) +
                                        " missing from the " + split_name + " split");
}

std::pair<double, double> mean_sample_stdev(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / double(v.size() - 1))};
}

} // namespace

StageMetrics stage_metrics(const OutcomeTable& table, int n_classes) {
    StageMetrics sm;
    sm.per_class.resize(size_t(n_classes));
    const int total = int(table.size());
    for (int c = 0; c < n_classes; ++c) {
        ClassStageMetrics& m = sm.per_class[size_t(c)];
        int ctp = 0, atp = 0, ofp = 0, tp = 0, wc = 0, predicted = 0;
        for (const OutcomeRecord& r : table) {
            const bool own = r.true_class == c;
            const bool acc = r.accepted[size_t(c)] != 0;
            int n_acc = 0;
            for (uint8_t a : r.accepted) n_acc += a != 0;
            if (own) {
                m.support += 1;
                if (acc) (n_acc == 1 ? ctp : atp) += 1;
                if (r.final_class == c) tp += 1;
            } else {
                if (acc) ofp += 1;
                if (r.final_class == c) wc += 1;
            }
            if (r.final_class == c) predicted += 1;
        }
        m.foreign = total - m.support;
        if (m.support > 0) {
            m.ctp = 100.0 * ctp / m.support;
            m.atp = 100.0 * atp / m.support;
            m.otp = m.ctp + m.atp;
            m.tp = 100.0 * tp / m.support;
        }
        if (m.foreign > 0) {
            m.ofp_first = 100.0 * ofp / m.foreign;
            m.fp = 100.0 * wc / m.foreign;
        }
        const double precision = predicted > 0 ? double(tp) / predicted : 0.0;
        const double recall = m.support > 0 ? double(tp) / m.support : 0.0;
        m.f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    int present = 0, with_foreign = 0;
    for (const auto& m : sm.per_class) {
        if (m.support > 0) {
            sm.avg_otp += m.otp;
            sm.avg_tp += m.tp;
            sm.macro_f += m.f1;
            ++present;
        }
        if (m.foreign > 0) {
            sm.avg_ofp_first += m.ofp_first;
            sm.avg_fp += m.fp;
            ++with_foreign;
        }
    }
    if (present > 0) {
        sm.avg_otp /= present;
        sm.avg_tp /= present;
        sm.macro_f /= present;
    }
    if (with_foreign > 0) {
        sm.avg_ofp_first /= with_foreign;
        sm.avg_fp /= with_foreign;
    }
    return sm;
}

double tp_rate(const OutcomeTable& table, int cls) {
    int support = 0, hit = 0;
    for (const OutcomeRecord& r : table) {
        if (r.true_class != cls) continue;
        ++support;
        hit += r.final_class == cls;
    }
    if (support == 0) throw std::invalid_argument("tp_rate: class has no test cells");
    return 100.0 * hit / support;
}

double fp_rate(const OutcomeTable& table, int n_classes) {
    std::vector<int> present(size_t(n_classes), 0);
    for (const OutcomeRecord& r : table) ++present[size_t(r.true_class)];
    int k = 0;
    for (int v : present) k += v > 0;
    if (k < 2) throw std::invalid_argument("fp_rate: needs at least two classes");
    double sum = 0;
    for (int c = 0; c < n_classes; ++c) {
        int foreign = 0, wrong = 0;
        for (const OutcomeRecord& r : table) {
            if (r.true_class == c) continue;
            ++foreign;
            wrong += r.final_class == c;
        }
        if (foreign > 0) sum += double(wrong) / foreign;
    }
    return 100.0 * sum / n_classes;
}

Matrix feature_matrix(const ExtractedDataset& ds, FeatureSetKind kind) {
    Matrix m;
    for (const FeatureBundle& b : ds.bundles) m.push_row(bundle_vector(b, kind));
    return m;
}

SplitIndices stratified_split(const std::vector<int>& labels,
                              const std::vector<uint8_t>& intermediate, double train_frac,
                              double val_frac, uint64_t seed) {
    if (labels.size() != intermediate.size())
        throw std::invalid_argument("stratified_split: size mismatch");
    if (train_frac < 0 || val_frac < 0 || train_frac + val_frac > 1.0 + 1e-12)
        throw std::invalid_argument("stratified_split: bad fractions");
    std::map<std::pair<int, int>, std::vector<int>> strata;
    for (int i = 0; i < int(labels.size()); ++i)
        strata[{labels[size_t(i)], intermediate[size_t(i)] != 0}].push_back(i);
    Rng rng(seed);
    SplitIndices out;
    for (auto& [key, idx] : strata) {
        (void)key;
        rng.shuffle(idx);
        const int m = int(idx.size());
        int ntr = int(std::llround(train_frac * m));
        int nva = int(std::llround(val_frac * m));
        ntr = std::min(ntr, m);
        nva = std::min(nva, m - ntr);
        for (int i = 0; i < m; ++i) {
            if (i < ntr)
                out.train.push_back(idx[size_t(i)]);
            else if (i < ntr + nva)
                out.val.push_back(idx[size_t(i)]);
            else
                out.test.push_back(idx[size_t(i)]);
        }
    }
    return out;
}

TrainedFramework train_framework(const ExtractedDataset& ds, const FrameworkSpec& spec,
                                 const SplitIndices& split, uint64_t seed, Exec policy) {
    TrainedFramework tf;
    tf.spec = spec;
    const std::vector<int> ytr = subset_of(ds.labels, split.train);
    const std::vector<int> yva = subset_of(ds.labels, split.val);
    require_all_classes(ytr, "train");
    if (spec.kind != FrameworkKind::TreeEnsemble) require_all_classes(yva, "validation");

    const Matrix x_first = feature_matrix(ds, first_stage_kind(spec));
    Matrix xtr = x_first.select_rows(split.train);
    Matrix xva = x_first.select_rows(split.val);

    if (spec.kind == FrameworkKind::TreeEnsemble) {
        // trees split on raw thresholds, so no normalization
        TreeEnsembleModel em;
        if (spec.ensemble == EnsembleKind::AdaBoost) {
            em = train_adaboost(xtr, ytr, kNumClasses, spec.boost, seed);
        } else {
            ForestParams fp = spec.forest;
            CutMode cut = CutMode::BestSplit;
            if (spec.ensemble == EnsembleKind::RandomUniformForest) {
                fp.max_depth = -1;
                cut = CutMode::UniformRandom;
            }
            ForestWithCurve fwc =
                train_forest_with_curve(xtr, ytr, kNumClasses, fp, seed, cut, policy);
            const int keep = select_n_trees(fwc.curve, spec.forest_improve_pp, spec.forest_window);
            fwc.model.trees.resize(size_t(keep));
            fwc.model.weights.resize(size_t(keep));
            fwc.model.oob_error = fwc.curve[size_t(keep - 1)];
            tf.oob_curve = std::move(fwc.curve);
            em = std::move(fwc.model);
        }
        tf.model = make_tree_framework(std::move(em));
        return tf;
    }

    tf.first_norm = fit_zscore(xtr);
    xtr = apply_zscore(tf.first_norm, xtr);
    xva = apply_zscore(tf.first_norm, xva);

    switch (spec.kind) {
        case FrameworkKind::OneVsOne:
            tf.model = train_one_vs_one(xtr, ytr, xva, yva, spec.grid, policy);
            break;
        case FrameworkKind::OneVsRest:
            tf.model = train_one_vs_rest(xtr, ytr, xva, yva, spec.grid, seed, policy);
            break;
        case FrameworkKind::HierCommon:
            tf.model = train_hier_common(xtr, ytr, xva, yva, spec.grid, policy);
            break;
        case FrameworkKind::HierCascade:
            tf.model = train_cascade(xtr, ytr, xva, yva, spec.grid, policy);
            break;
        case FrameworkKind::TreeEnsemble: break; // handled above
    }

    if (spec.resolver == ResolverKind::PairwiseBlocks) {
        const Matrix x_second = feature_matrix(ds, spec.features);
        Matrix str = x_second.select_rows(split.train);
        Matrix sva = x_second.select_rows(split.val);
        tf.second_norm = fit_zscore(str);
        str = apply_zscore(tf.second_norm, str);
        sva = apply_zscore(tf.second_norm, sva);
        attach_pairwise_resolver(tf.model, str, ytr, sva, yva, spec.grid, policy);
    } else if (spec.kind != FrameworkKind::OneVsOne) {
        tf.model.resolver = spec.resolver;
    }
    return tf;
}

Prediction classify(const TrainedFramework& tf, const FeatureBundle& bundle) {
    std::vector<double> x1 = bundle_vector(bundle, first_stage_kind(tf.spec));
    if (!tf.first_norm.mean.empty()) x1 = apply_zscore(tf.first_norm, x1);
    std::vector<double> x2;
    if (tf.model.resolver == ResolverKind::PairwiseBlocks) {
        x2 = bundle_vector(bundle, tf.spec.features);
        if (!tf.second_norm.mean.empty()) x2 = apply_zscore(tf.second_norm, x2);
    }
    return predict(tf.model, x1, x2);
}

ExperimentReport run_experiment(const ExtractedDataset& ds, const ExperimentPlan& plan,
                                const FrameworkSpec& spec, Exec policy) {
    if (plan.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
    ExperimentReport report;
    report.spec = spec;
    report.plan = plan;
    for (uint64_t seed : plan.seeds) {
        SplitIndices split =
            stratified_split(ds.labels, ds.intermediate, plan.train_frac, plan.val_frac, seed);
        TrainedFramework tf = train_framework(ds, spec, split, seed, policy);

        std::vector<int> test_rows;
        for (int i : split.test)
            if (!plan.test_intermediates_only || ds.intermediate[size_t(i)]) test_rows.push_back(i);

        OutcomeTable table(test_rows.size());
        parallel_for(int(test_rows.size()), policy, [&](int t) {
            const int row = test_rows[size_t(t)];
            Prediction p = classify(tf, ds.bundles[size_t(row)]);
            OutcomeRecord& r = table[size_t(t)];
            r.true_class = ds.labels[size_t(row)];
            r.intermediate = ds.intermediate[size_t(row)] != 0;
            r.accepted = std::move(p.first.accepted);
            r.score = std::move(p.first.score);
            r.final_class = p.final_class;
        });

        SeedRun run;
        run.seed = seed;
        run.metrics = stage_metrics(table, kNumClasses);
        run.table = std::move(table);
        report.runs.push_back(std::move(run));
    }
    aggregate_metrics(report.runs, report.mean, report.stdev);
    return report;
}

void aggregate_metrics(const std::vector<SeedRun>& runs, StageMetrics& mean, StageMetrics& stdev) {
    if (runs.empty()) throw std::invalid_argument("aggregate_metrics: no runs");
    const int k = int(runs.front().metrics.per_class.size());
    mean = StageMetrics{};
    stdev = StageMetrics{};
    mean.per_class.resize(size_t(k));
    stdev.per_class.resize(size_t(k));

    auto stat = [&](auto field_of) {
        std::vector<double> v;
        v.reserve(runs.size());
        for (const SeedRun& r : runs) v.push_back(field_of(r.metrics));
        return mean_sample_stdev(v);
    };

    for (int c = 0; c < k; ++c) {
        auto& mc = mean.per_class[size_t(c)];
        auto& sc = stdev.per_class[size_t(c)];
        double supp = 0, forg = 0;
        for (const SeedRun& r : runs) {
            supp += r.metrics.per_class[size_t(c)].support;
            forg += r.metrics.per_class[size_t(c)].foreign;
        }
        mc.support = int(std::llround(supp / double(runs.size())));
        mc.foreign = int(std::llround(forg / double(runs.size())));
        auto pc = [c](auto member) {
            return [c, member](const StageMetrics& m) { return m.per_class[size_t(c)].*member; };
        };
        std::tie(mc.ctp, sc.ctp) = stat(pc(&ClassStageMetrics::ctp));
        std::tie(mc.atp, sc.atp) = stat(pc(&ClassStageMetrics::atp));
        std::tie(mc.otp, sc.otp) = stat(pc(&ClassStageMetrics::otp));
        std::tie(mc.ofp_first, sc.ofp_first) = stat(pc(&ClassStageMetrics::ofp_first));
        std::tie(mc.tp, sc.tp) = stat(pc(&ClassStageMetrics::tp));
        std::tie(mc.fp, sc.fp) = stat(pc(&ClassStageMetrics::fp));
        std::tie(mc.f1, sc.f1) = stat(pc(&ClassStageMetrics::f1));
    }
    auto top = [](auto member) {
        return [member](const StageMetrics& m) { return m.*member; };
    };
    std::tie(mean.avg_otp, stdev.avg_otp) = stat(top(&StageMetrics::avg_otp));
    std::tie(mean.avg_ofp_first, stdev.avg_ofp_first) = stat(top(&StageMetrics::avg_ofp_first));
    std::tie(mean.avg_tp, stdev.avg_tp) = stat(top(&StageMetrics::avg_tp));
    std::tie(mean.avg_fp, stdev.avg_fp) = stat(top(&StageMetrics::avg_fp));
    std::tie(mean.macro_f, stdev.macro_f) = stat(top(&StageMetrics::macro_f));
}

void write_metrics_text(std::ostream& os, const ExperimentReport& report) {
    os << "framework " << framework_kind_name(report.spec.kind) << "  features "
       << feature_set_name(report.spec.features) << "  resolver "
       << resolver_kind_name(report.spec.resolver) << "  seeds " << report.runs.size() << "\n";
    if (report.spec.kind == FrameworkKind::TreeEnsemble)
        os << "ensemble " << ensemble_kind_name(report.spec.ensemble) << "\n";
    os << std::fixed << std::setprecision(2);
    os << "class   n    OTP%          OFP1%         TP%           FP%           F\n";
    for (int c = 0; c < int(report.mean.per_class.size()); ++c) {
        const auto& m = report.mean.per_class[size_t(c)];
        const auto& s = report.stdev.per_class[size_t(c)];
        os << std::left << std::setw(6) << class_name(ClassId(c)) << std::right << std::setw(4)
           << m.support;
        auto cell = [&](double mv, double sv) {
            os << "  " << std::setw(6) << mv << "/" << std::setw(5) << sv;
        };
        cell(m.otp, s.otp);
        cell(m.ofp_first, s.ofp_first);
        cell(m.tp, s.tp);
        cell(m.fp, s.fp);
        os << "  " << std::setw(5) << std::setprecision(3) << m.f1 << "/" << std::setw(5) << s.f1
           << std::setprecision(2) << "\n";
    }
    os << "avg OTP " << report.mean.avg_otp << "/" << report.stdev.avg_otp << "  avg OFP1 "
       << report.mean.avg_ofp_first << "/" << report.stdev.avg_ofp_first << "\n";
    os << "avg TP  " << report.mean.avg_tp << "/" << report.stdev.avg_tp << "  avg FP   "
       << report.mean.avg_fp << "/" << report.stdev.avg_fp << "\n";
    os << "macro F " << std::setprecision(4) << report.mean.macro_f << "/" << report.stdev.macro_f
       << "\n";
    os.unsetf(std::ios::fixed);
    os << std::setprecision(6);
}

void write_metrics_csv(std::ostream& os, const ExperimentReport& report) {
    os << "seed,class,support,foreign,ctp,atp,otp,ofp_first,tp,fp,f1\n";
    os << std::setprecision(9);
    auto rows = [&](const std::string& tag, const StageMetrics& sm) {
        for (int c = 0; c < int(sm.per_class.size()); ++c) {
            const auto& m = sm.per_class[size_t(c)];
            os << tag << "," << class_name(ClassId(c)) << "," << m.support << "," << m.foreign
               << "," << m.ctp << "," << m.atp << "," << m.otp << "," << m.ofp_first << "," << m.tp
               << "," << m.fp << "," << m.f1 << "\n";
        }
        os << tag << ",avg,,," << "," << "," << sm.avg_otp << "," << sm.avg_ofp_first << ","
           << sm.avg_tp << "," << sm.avg_fp << "," << sm.macro_f << "\n";
    };
    for (const SeedRun& r : report.runs) rows(std::to_string(r.seed), r.metrics);
    rows("mean", report.mean);
    rows("stdev", report.stdev);
}

} // namespace hep2
