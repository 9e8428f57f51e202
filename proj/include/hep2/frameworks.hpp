#ifndef HEP2_FRAMEWORKS_HPP
#define HEP2_FRAMEWORKS_HPP

#include <cstdint>
#include <vector>

#include "hep2/features.hpp"
#include "hep2/matrix.hpp"
#include "hep2/svm.hpp"
#include "hep2/trees.hpp"

namespace hep2 {

enum class FrameworkKind { OneVsOne, OneVsRest, HierCascade, HierCommon, TreeEnsemble };
const char* framework_kind_name(FrameworkKind k);

enum class ResolverKind { None, SvmScore, AvgSvmScore, PairwiseBlocks };
const char* resolver_kind_name(ResolverKind k);

/// Binary block for an ordered pair a < b; the model's +1 side is class a.
struct PairBlock {
    int a = 0;
    int b = 0;
    SvmModel model;
    GridSearchResult tuning;
};

/// One i-vs-j sub-block of a verification block. +1 side is the owner class.
/// `subset` lists the feature columns the model reads (empty = all columns).
struct SubBlock {
    int opponent = 0;
    std::vector<int> subset;
    SvmModel model;
    GridSearchResult tuning;
    double val_balanced_accuracy = 0.0;
};

/// Verification block of a hierarchical framework: class `owner` is accepted
/// only when all sub-blocks decide for the owner.
struct VerificationBlock {
    int owner = 0;
    std::vector<SubBlock> subs;
};

/// A trained classification framework together with everything prediction
/// needs: extractor configuration and the normalization fitted on the
/// training split for each feature space involved.
struct FrameworkModel {
    FrameworkKind kind = FrameworkKind::OneVsOne;
    ResolverKind resolver = ResolverKind::None;
    FeatureSetKind first_kind = FeatureSetKind::ClassSpecific;
    FeatureSetKind second_kind = FeatureSetKind::ClassSpecific;
    ExtractorConfig config;
    NormalizationStats first_stats;
    NormalizationStats second_stats; // used only with PairwiseBlocks

    std::vector<PairBlock> pair_blocks;        // OneVsOne first stage
    std::vector<SvmModel> rest_blocks;         // OneVsRest, indexed by class
    std::vector<GridSearchResult> rest_tuning;
    std::vector<VerificationBlock> hier_blocks;
    std::vector<PairBlock> second_stage;       // PairwiseBlocks resolver
    TreeEnsembleModel ensemble;
};

/// First-stage result for one sample. For one-vs-one and tree ensembles the
/// accepting set is the single winning class.
struct FirstStageOutcome {
    std::vector<uint8_t> accepted;
    std::vector<double> score; // per class: block score (OvR), mean sub-block
                               // score (hierarchical), summed signed scores (OvO)
};

// ---- training (inputs are normalized feature matrices, labels 0..5) ----

FrameworkModel train_one_vs_one(const Matrix& x_train, const std::vector<int>& y_train,
                                const Matrix& x_val, const std::vector<int>& y_val,
                                const TrainGrid& grid, Exec policy = Exec::Serial);

/// Per-class draw counts for balanced negatives: class j contributes
/// round(alpha * N_j) with alpha = N_i / sum_{j != i} N_j, the rounding
/// residue corrected on the largest other class.
std::vector<int> balanced_negative_sample(const std::vector<int>& counts, int target_class);

FrameworkModel train_one_vs_rest(const Matrix& x_train, const std::vector<int>& y_train,
                                 const Matrix& x_val, const std::vector<int>& y_val,
                                 const TrainGrid& grid, uint64_t seed,
                                 Exec policy = Exec::Serial);

/// Hierarchical framework on the full feature set; every sub-block is
/// grid-tuned independently.
FrameworkModel train_hier_common(const Matrix& x_train, const std::vector<int>& y_train,
                                 const Matrix& x_val, const std::vector<int>& y_val,
                                 const TrainGrid& grid, Exec policy = Exec::Serial);

/// All sub-block feature subsets of sizes 3..6 drawn from an 8-column pool.
std::vector<std::vector<int>> cascade_candidate_subsets(int pool_size = 8);

/// Cascade of verification blocks on the scalar-pool features. Each sub-block
/// exhaustively searches the 210 candidate subsets of its 8-column pool (the
/// two classes' triplets plus mean and variance), keeping the subset with the
/// best validation balanced accuracy (ties: smaller subset, then
/// lexicographic order).
FrameworkModel train_cascade(const Matrix& pool_train, const std::vector<int>& y_train,
                             const Matrix& pool_val, const std::vector<int>& y_val,
                             const TrainGrid& grid, Exec policy = Exec::Serial);

FrameworkModel make_tree_framework(TreeEnsembleModel ensemble);

/// Train the 15 pairwise second-stage blocks on the given (full) feature
/// space and attach them to `model` as its PairwiseBlocks resolver.
void attach_pairwise_resolver(FrameworkModel& model, const Matrix& x_train,
                              const std::vector<int>& y_train, const Matrix& x_val,
                              const std::vector<int>& y_val, const TrainGrid& grid,
                              Exec policy = Exec::Serial);

// ---- prediction (inputs are normalized feature vectors) ----

/// Winner of a one-vs-one vote. Ties take the larger summed signed score
/// among the tied classes; a residual tie takes the smallest class index.
int resolve_ovo_votes(const std::vector<int>& votes, const std::vector<double>& sum_scores);

FirstStageOutcome first_stage_accepts(const FrameworkModel& m, const std::vector<double>& x);

/// Highest-scoring accepting class; -1 when nothing accepted.
int resolve_by_score(const FirstStageOutcome& o);

/// Pairwise second stage: two-way ambiguities are decided by the single
/// block for that pair; k-way ambiguities need a class to win all its blocks
/// inside the ambiguity set, otherwise score resolution decides.
int resolve_pairwise(const FrameworkModel& m, const FirstStageOutcome& o,
                     const std::vector<double>& x_second);

struct Prediction {
    FirstStageOutcome first;
    int final_class = -1;
};

/// Full prediction. x_second is consulted only by the PairwiseBlocks
/// resolver and may be empty otherwise.
Prediction predict(const FrameworkModel& m, const std::vector<double>& x_first,
                   const std::vector<double>& x_second = {});

} // namespace hep2

#endif
