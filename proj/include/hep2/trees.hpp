#ifndef HEP2_TREES_HPP
#define HEP2_TREES_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hep2/matrix.hpp"
#include "hep2/parallel.hpp"
#include "hep2/rng.hpp"

namespace hep2 {

/// Binary decision-tree node. feature < 0 marks a leaf; counts then holds the
/// (weighted) class histogram of the training samples routed to it.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> counts;
    bool leaf() const { return feature < 0; }
};

struct DecisionTree {
    int n_classes = 0;
    std::vector<TreeNode> nodes;
};

enum class CutMode {
    BestSplit,     // exhaustive midpoint cuts minimizing weighted Gini
    UniformRandom, // one uniform random cut per candidate feature
};

struct TreeParams {
    int max_depth = -1; // -1 = unlimited
    int min_leaf = 1;
    int mtry = 0; // candidate features per node, 0 = all
    CutMode cut = CutMode::BestSplit;
};

/// Greedy Gini-impurity tree. `weights` may be empty for uniform weights.
/// `rng` is consulted only for feature subsampling and random cuts.
DecisionTree train_tree(const Matrix& x, const std::vector<int>& y, int n_classes,
                        const TreeParams& params, Rng& rng,
                        const std::vector<double>& weights = {});

int tree_predict(const DecisionTree& t, const double* x);
/// Index of the leaf node x is routed to.
int tree_leaf_for(const DecisionTree& t, const double* x);

enum class EnsembleKind { RandomForest, RandomUniformForest, AdaBoost };
const char* ensemble_kind_name(EnsembleKind k);

struct TreeEnsembleModel {
    EnsembleKind kind = EnsembleKind::RandomForest;
    int n_classes = 0;
    int dim = 0;
    std::vector<DecisionTree> trees;
    std::vector<double> weights;      // per-tree vote weight (1 for bagging)
    double oob_error = -1.0;          // -1 when not tracked
    std::vector<double> round_errors; // AdaBoost weighted error per accepted round
};

struct ForestParams {
    int n_trees = 100;
    int mtry = 0; // 0 = floor(sqrt(dim))
    bool bootstrap = true;
    int max_depth = -1;
    int min_leaf = 1;
};

TreeEnsembleModel train_random_forest(const Matrix& x, const std::vector<int>& y, int n_classes,
                                      const ForestParams& params, uint64_t seed,
                                      Exec policy = Exec::Parallel);

/// Unpruned trees with uniform random cut-points.
TreeEnsembleModel train_random_uniform_forest(const Matrix& x, const std::vector<int>& y,
                                              int n_classes, const ForestParams& params,
                                              uint64_t seed, Exec policy = Exec::Parallel);

/// OOB error after each of the first k trees (k = 1..params.n_trees), using
/// the same per-tree seed stream as the corresponding train_* call.
std::vector<double> oob_error_curve(const Matrix& x, const std::vector<int>& y, int n_classes,
                                    const ForestParams& params, uint64_t seed,
                                    CutMode cut = CutMode::BestSplit,
                                    Exec policy = Exec::Parallel);

/// Forest plus its OOB curve in one pass (the forest equals the train_* result).
struct ForestWithCurve {
    TreeEnsembleModel model;
    std::vector<double> curve;
};
ForestWithCurve train_forest_with_curve(const Matrix& x, const std::vector<int>& y, int n_classes,
                                        const ForestParams& params, uint64_t seed, CutMode cut,
                                        Exec policy = Exec::Parallel);

/// First n with n > window where error improves on err[n - window] by less
/// than improve_pp percentage points; falls back to the curve length.
int select_n_trees(const std::vector<double>& curve, double improve_pp = 0.25, int window = 10);

struct AdaBoostParams {
    int n_rounds = 100;
    int base_depth = 3;
    int max_retries = 10;
};

/// SAMME multi-class boosting with depth-limited Gini trees.
TreeEnsembleModel train_adaboost(const Matrix& x, const std::vector<int>& y, int n_classes,
                                 const AdaBoostParams& params, uint64_t seed);

/// Weighted vote over the ensemble; ties resolve to the smallest class index.
int ensemble_predict(const TreeEnsembleModel& m, const double* x);
int ensemble_predict(const TreeEnsembleModel& m, const std::vector<double>& x);
std::vector<int> ensemble_predict(const TreeEnsembleModel& m, const Matrix& x,
                                  Exec policy = Exec::Serial);

void save_ensemble(std::ostream& os, const TreeEnsembleModel& m);
TreeEnsembleModel load_ensemble(std::istream& is);

} // namespace hep2

#endif
