#ifndef HEP2_EVAL_HPP
#define HEP2_EVAL_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hep2/features.hpp"
#include "hep2/frameworks.hpp"
#include "hep2/matrix.hpp"
#include "hep2/parallel.hpp"
#include "hep2/trees.hpp"

namespace hep2 {

// ---- outcome bookkeeping ----

/// One test cell: what the first stage accepted, the per-class scores, and the
/// final assignment (-1 = rejected / unresolved).
struct OutcomeRecord {
    int true_class = -1;
    std::vector<uint8_t> accepted;
    std::vector<double> score;
    int final_class = -1;
    bool intermediate = false;
};

using OutcomeTable = std::vector<OutcomeRecord>;

/// Per-class rates, all in percent except the F-measure.
///   ctp        accepted by the true block alone
///   atp        accepted by the true block and at least one other
///   otp        ctp + atp
///   ofp_first  foreign cells the block accepted, over foreign support
///   tp         final assignments equal to the true class, over class support
///   fp         foreign cells finally assigned to this class, over foreign support
struct ClassStageMetrics {
    int support = 0; // test cells of this class
    int foreign = 0; // test cells of the other classes
    double ctp = 0.0;
    double atp = 0.0;
    double otp = 0.0;
    double ofp_first = 0.0;
    double tp = 0.0;
    double fp = 0.0;
    double f1 = 0.0;
};

struct StageMetrics {
    std::vector<ClassStageMetrics> per_class;
    double avg_otp = 0.0;
    double avg_ofp_first = 0.0;
    double avg_tp = 0.0;
    double avg_fp = 0.0;
    double macro_f = 0.0; // mean F-measure over classes present in the test set
};

StageMetrics stage_metrics(const OutcomeTable& table, int n_classes);

/// Final true-positive rate for one class in percent; throws when the class
/// has no test cells.
double tp_rate(const OutcomeTable& table, int cls);

/// Averaged false-positive rate in percent over all classes; requires at
/// least two classes present.
double fp_rate(const OutcomeTable& table, int n_classes);

// ---- datasets and splits ----

/// Features for every cell of a dataset, extracted once and reused.
struct ExtractedDataset {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<uint8_t> intermediate;
    std::vector<FeatureBundle> bundles;
    ExtractorConfig config;

    int size() const { return int(labels.size()); }
};

/// Row matrix of one feature set (combined rows are assembled on demand).
Matrix feature_matrix(const ExtractedDataset& ds, FeatureSetKind kind);

struct SplitIndices {
    std::vector<int> train, val, test;
};

/// Shuffle each (class, intensity) stratum and cut it round(train_frac * m) /
/// round(val_frac * m) / rest. Strata are visited in a fixed order so the
/// split depends only on the seed.
SplitIndices stratified_split(const std::vector<int>& labels,
                              const std::vector<uint8_t>& intermediate, double train_frac,
                              double val_frac, uint64_t seed);

// ---- experiment configuration ----

struct ExperimentPlan {
    double train_frac = 0.4;
    double val_frac = 0.3;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    bool test_intermediates_only = false;
};

struct FrameworkSpec {
    FrameworkKind kind = FrameworkKind::OneVsOne;
    ResolverKind resolver = ResolverKind::None;
    FeatureSetKind features = FeatureSetKind::Combined;
    TrainGrid grid;
    EnsembleKind ensemble = EnsembleKind::RandomForest; // when kind == TreeEnsemble
    ForestParams forest;
    AdaBoostParams boost;
    double forest_improve_pp = 0.25; // OOB elbow rule
    int forest_window = 10;
};

/// A framework trained on one split, with the column statistics needed to
/// feed it new cells.
struct TrainedFramework {
    FrameworkSpec spec;
    FrameworkModel model;
    NormalizationStats first_norm;  // empty mean = no normalization (trees)
    NormalizationStats second_norm; // used by the pairwise resolver
    std::vector<double> oob_curve;  // forest frameworks only
};

TrainedFramework train_framework(const ExtractedDataset& ds, const FrameworkSpec& spec,
                                 const SplitIndices& split, uint64_t seed,
                                 Exec policy = Exec::Serial);

/// Classify one cell with a trained framework.
Prediction classify(const TrainedFramework& tf, const FeatureBundle& bundle);

// ---- experiment driver ----

struct SeedRun {
    uint64_t seed = 0;
    StageMetrics metrics;
    OutcomeTable table;
};

struct ExperimentReport {
    FrameworkSpec spec;
    ExperimentPlan plan;
    std::vector<SeedRun> runs;
    StageMetrics mean;  // element-wise over runs
    StageMetrics stdev; // sample standard deviation (n - 1)
};

/// Train and test the framework once per seed and aggregate the metrics.
ExperimentReport run_experiment(const ExtractedDataset& ds, const ExperimentPlan& plan,
                                const FrameworkSpec& spec, Exec policy = Exec::Serial);

/// Element-wise mean and sample standard deviation of per-seed metrics.
void aggregate_metrics(const std::vector<SeedRun>& runs, StageMetrics& mean, StageMetrics& stdev);

void write_metrics_text(std::ostream& os, const ExperimentReport& report);
void write_metrics_csv(std::ostream& os, const ExperimentReport& report);

} // namespace hep2

#endif
