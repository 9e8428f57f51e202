#include "hep2/trees.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hep2 {

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0; // weighted Gini after the split, lower is better
    bool found = false;
};

double gini_of(const std::vector<double>& cw, double total) {
    if (total <= 0) return 0.0;
    double g = 1.0;
    for (double c : cw) g -= (c / total) * (c / total);
    return g;
}

// Candidate features for one node: all of them, or an mtry-subset drawn from
// rng and sorted so that tie-breaking stays order-deterministic.
std::vector<int> candidate_features(int dim, int mtry, Rng& rng) {
    if (mtry <= 0 || mtry >= dim) {
        std::vector<int> all(size_t(dim), 0);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    auto picked = rng.sample_without_replacement(dim, mtry);
    std::sort(picked.begin(), picked.end());
    return picked;
}

SplitChoice best_split(const Matrix& x, const std::vector<int>& y,
                       const std::vector<double>& w, const std::vector<int>& idx, int n_classes,
                       const TreeParams& params, Rng& rng) {
    SplitChoice best;
    auto feats = candidate_features(x.cols, params.mtry, rng);

    if (params.cut == CutMode::UniformRandom) {
        for (int f : feats) {
            double lo = x.at(idx[0], f), hi = lo;
            for (int i : idx) {
                lo = std::min(lo, x.at(i, f));
                hi = std::max(hi, x.at(i, f));
            }
            if (!(hi > lo)) continue;
            double cut = rng.uniform(lo, hi);
            std::vector<double> lw(size_t(n_classes), 0.0), rw(size_t(n_classes), 0.0);
            double ltot = 0, rtot = 0;
            int lcount = 0;
            for (int i : idx) {
                if (x.at(i, f) <= cut) {
                    lw[size_t(y[size_t(i)])] += w[size_t(i)];
                    ltot += w[size_t(i)];
                    ++lcount;
                } else {
                    rw[size_t(y[size_t(i)])] += w[size_t(i)];
                    rtot += w[size_t(i)];
                }
            }
            int rcount = int(idx.size()) - lcount;
            if (lcount < params.min_leaf || rcount < params.min_leaf) continue;
            double score = ltot * gini_of(lw, ltot) + rtot * gini_of(rw, rtot);
            if (!best.found || score < best.score) {
                best = {f, cut, score, true};
            }
        }
        return best;
    }

    std::vector<std::pair<double, int>> order(idx.size()); // (value, sample)
    for (int f : feats) {
        for (size_t i = 0; i < idx.size(); ++i) order[i] = {x.at(idx[i], f), idx[i]};
        std::sort(order.begin(), order.end());
        std::vector<double> lw(size_t(n_classes), 0.0), rw(size_t(n_classes), 0.0);
        double ltot = 0, rtot = 0;
        for (auto& [v, i] : order) {
            rw[size_t(y[size_t(i)])] += w[size_t(i)];
            rtot += w[size_t(i)];
        }
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            auto [v, s] = order[i];
            lw[size_t(y[size_t(s)])] += w[size_t(s)];
            ltot += w[size_t(s)];
            rw[size_t(y[size_t(s)])] -= w[size_t(s)];
            rtot -= w[size_t(s)];
            if (order[i + 1].first <= v) continue; // same value, no cut here
            int lcount = int(i) + 1, rcount = int(order.size() - i) - 1;
            if (lcount < params.min_leaf || rcount < params.min_leaf) continue;
            double score = ltot * gini_of(lw, ltot) + rtot * gini_of(rw, rtot);
            if (!best.found || score < best.score) {
                best = {f, (v + order[i + 1].first) / 2.0, score, true};
            }
        }
    }
    return best;
}

} // namespace

DecisionTree train_tree(const Matrix& x, const std::vector<int>& y, int n_classes,
                        const TreeParams& params, Rng& rng, const std::vector<double>& weights) {
    if (x.rows < 1) throw std::invalid_argument("train_tree: empty training set");
    if (int(y.size()) != x.rows) throw std::invalid_argument("train_tree: label count mismatch");
    if (n_classes < 2) throw std::invalid_argument("train_tree: need at least 2 classes");
    if (params.min_leaf < 1) throw std::invalid_argument("train_tree: min_leaf must be >= 1");
    if (x.rows < params.min_leaf) throw std::invalid_argument("train_tree: fewer samples than min_leaf");
    for (int v : y)
        if (v < 0 || v >= n_classes) throw std::invalid_argument("train_tree: label out of range");
    std::vector<double> w = weights;
    if (w.empty()) w.assign(size_t(x.rows), 1.0);
    if (int(w.size()) != x.rows) throw std::invalid_argument("train_tree: weight count mismatch");
    for (double v : w)
        if (!(v >= 0)) throw std::invalid_argument("train_tree: negative weight");

    DecisionTree tree;
    tree.n_classes = n_classes;

    struct Job {
        std::vector<int> idx;
        int node;
        int depth;
    };
    std::vector<int> root(size_t(x.rows));
    std::iota(root.begin(), root.end(), 0);
    tree.nodes.emplace_back();
    std::vector<Job> stack;
    stack.push_back({std::move(root), 0, 0});

    while (!stack.empty()) {
        Job job = std::move(stack.back());
        stack.pop_back();

        std::vector<double> cw(size_t(n_classes), 0.0);
        double total = 0;
        for (int i : job.idx) {
            cw[size_t(y[size_t(i)])] += w[size_t(i)];
            total += w[size_t(i)];
        }
        bool pure = false;
        for (double c : cw) pure = pure || c == total;
        bool depth_stop = params.max_depth >= 0 && job.depth >= params.max_depth;

        SplitChoice split;
        if (!pure && !depth_stop && int(job.idx.size()) >= 2 * params.min_leaf && total > 0)
            split = best_split(x, y, w, job.idx, n_classes, params, rng);

        TreeNode& node = tree.nodes[size_t(job.node)];
        if (!split.found) {
            node.counts = std::move(cw);
            continue;
        }
        node.feature = split.feature;
        node.threshold = split.threshold;
        std::vector<int> li, ri;
        for (int i : job.idx)
            (x.at(i, split.feature) <= split.threshold ? li : ri).push_back(i);
        node.left = int(tree.nodes.size());
        tree.nodes.emplace_back();
        node.right = int(tree.nodes.size());
        tree.nodes.emplace_back();
        int l = tree.nodes[size_t(job.node)].left, r = tree.nodes[size_t(job.node)].right;
        // push right first so the left child is processed (and numbered) next
        stack.push_back({std::move(ri), r, job.depth + 1});
        stack.push_back({std::move(li), l, job.depth + 1});
    }
    return tree;
}

int tree_leaf_for(const DecisionTree& t, const double* x) {
    int n = 0;
    while (!t.nodes[size_t(n)].leaf())
        n = x[t.nodes[size_t(n)].feature] <= t.nodes[size_t(n)].threshold ? t.nodes[size_t(n)].left
                                                                          : t.nodes[size_t(n)].right;
    return n;
}

int tree_predict(const DecisionTree& t, const double* x) {
    const auto& counts = t.nodes[size_t(tree_leaf_for(t, x))].counts;
    int best = 0;
    for (int k = 1; k < int(counts.size()); ++k)
        if (counts[size_t(k)] > counts[size_t(best)]) best = k;
    return best;
}

const char* ensemble_kind_name(EnsembleKind k) {
    switch (k) {
        case EnsembleKind::RandomForest: return "rf";
        case EnsembleKind::RandomUniformForest: return "ruf";
        case EnsembleKind::AdaBoost: return "adaboost";
    }
    return "?";
}

ForestWithCurve train_forest_with_curve(const Matrix& x, const std::vector<int>& y, int n_classes,
                                        const ForestParams& params, uint64_t seed, CutMode cut,
                                        Exec policy) {
    if (params.n_trees < 1) throw std::invalid_argument("forest: n_trees must be >= 1");
    const int n = x.rows;
    int mtry = params.mtry > 0 ? params.mtry : int(std::floor(std::sqrt(double(x.cols))));

    Rng master(seed);
    std::vector<uint64_t> tree_seeds(size_t(params.n_trees));
    for (auto& s : tree_seeds) s = master.next_u64();

    ForestWithCurve out;
    out.model.kind = cut == CutMode::UniformRandom ? EnsembleKind::RandomUniformForest
                                                   : EnsembleKind::RandomForest;
    out.model.n_classes = n_classes;
    out.model.dim = x.cols;
    out.model.trees.resize(size_t(params.n_trees));
    out.model.weights.assign(size_t(params.n_trees), 1.0);

    std::vector<std::vector<int>> oob_lists(size_t(params.n_trees));
    parallel_for(params.n_trees, policy, [&](int t) {
        Rng rng(tree_seeds[size_t(t)]);
        TreeParams tp;
        tp.max_depth = params.max_depth;
        tp.min_leaf = params.min_leaf;
        tp.mtry = mtry;
        tp.cut = cut;
        if (params.bootstrap) {
            std::vector<int> bag(size_t(n), 0);
            std::vector<uint8_t> inbag(size_t(n), 0);
            for (int i = 0; i < n; ++i) {
                bag[size_t(i)] = rng.uniform_int(0, n - 1);
                inbag[size_t(bag[size_t(i)])] = 1;
            }
            Matrix bx = x.select_rows(bag);
            std::vector<int> by(size_t(n));
            for (int i = 0; i < n; ++i) by[size_t(i)] = y[size_t(bag[size_t(i)])];
            out.model.trees[size_t(t)] = train_tree(bx, by, n_classes, tp, rng);
            for (int i = 0; i < n; ++i)
                if (!inbag[size_t(i)]) oob_lists[size_t(t)].push_back(i);
        } else {
            out.model.trees[size_t(t)] = train_tree(x, y, n_classes, tp, rng);
        }
    });

    if (params.bootstrap) {
        std::vector<std::vector<int>> votes(size_t(n), std::vector<int>(size_t(n_classes), 0));
        out.curve.reserve(size_t(params.n_trees));
        for (int t = 0; t < params.n_trees; ++t) {
            for (int i : oob_lists[size_t(t)])
                ++votes[size_t(i)][size_t(tree_predict(out.model.trees[size_t(t)], x.row(i)))];
            int wrong = 0, seen = 0;
            for (int i = 0; i < n; ++i) {
                int tot = 0, best = 0;
                for (int k = 0; k < n_classes; ++k) {
                    tot += votes[size_t(i)][size_t(k)];
                    if (votes[size_t(i)][size_t(k)] > votes[size_t(i)][size_t(best)]) best = k;
                }
                if (tot == 0) continue;
                ++seen;
                wrong += best != y[size_t(i)];
            }
            out.curve.push_back(seen > 0 ? double(wrong) / seen : 1.0);
        }
        out.model.oob_error = out.curve.back();
    }
    return out;
}

TreeEnsembleModel train_random_forest(const Matrix& x, const std::vector<int>& y, int n_classes,
                                      const ForestParams& params, uint64_t seed, Exec policy) {
    return train_forest_with_curve(x, y, n_classes, params, seed, CutMode::BestSplit, policy).model;
}

TreeEnsembleModel train_random_uniform_forest(const Matrix& x, const std::vector<int>& y,
                                              int n_classes, const ForestParams& params,
                                              uint64_t seed, Exec policy) {
    ForestParams p = params;
    p.max_depth = -1; // unpruned by definition
    return train_forest_with_curve(x, y, n_classes, p, seed, CutMode::UniformRandom, policy).model;
}

std::vector<double> oob_error_curve(const Matrix& x, const std::vector<int>& y, int n_classes,
                                    const ForestParams& params, uint64_t seed, CutMode cut,
                                    Exec policy) {
    if (!params.bootstrap)
        throw std::invalid_argument("oob_error_curve: requires bootstrap sampling");
    return train_forest_with_curve(x, y, n_classes, params, seed, cut, policy).curve;
}

int select_n_trees(const std::vector<double>& curve, double improve_pp, int window) {
    if (curve.empty()) throw std::invalid_argument("select_n_trees: empty curve");
    for (int n = window + 1; n <= int(curve.size()); ++n) {
        double gain = curve[size_t(n - window - 1)] - curve[size_t(n - 1)];
        if (gain < improve_pp / 100.0) return n;
    }
    return int(curve.size());
}

TreeEnsembleModel train_adaboost(const Matrix& x, const std::vector<int>& y, int n_classes,
                                 const AdaBoostParams& params, uint64_t seed) {
    const int n = x.rows;
    if (n < 2) throw std::invalid_argument("adaboost: need at least 2 samples");
    if (params.n_rounds < 1) throw std::invalid_argument("adaboost: n_rounds must be >= 1");

    TreeEnsembleModel model;
    model.kind = EnsembleKind::AdaBoost;
    model.n_classes = n_classes;
    model.dim = x.cols;

    Rng rng(seed);
    std::vector<double> w(size_t(n), 1.0 / n);
    const double chance = 1.0 - 1.0 / n_classes;
    TreeParams tp;
    tp.max_depth = params.base_depth;

    for (int round = 0; round < params.n_rounds; ++round) {
        DecisionTree tree = train_tree(x, y, n_classes, tp, rng, w);
        double err = 0;
        for (int i = 0; i < n; ++i)
            if (tree_predict(tree, x.row(i)) != y[size_t(i)]) err += w[size_t(i)];

        int retries = 0;
        while (err >= chance && retries < params.max_retries) {
            // weighted bootstrap resample, then refit unweighted
            std::vector<double> cum(w.size());
            std::partial_sum(w.begin(), w.end(), cum.begin());
            double tot = cum.back();
            std::vector<int> bag(size_t(n), 0);
            for (int i = 0; i < n; ++i) {
                double u = rng.uniform() * tot;
                bag[size_t(i)] =
                    int(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
            }
            Matrix bx = x.select_rows(bag);
            std::vector<int> by(size_t(n));
            for (int i = 0; i < n; ++i) by[size_t(i)] = y[size_t(bag[size_t(i)])];
            tree = train_tree(bx, by, n_classes, tp, rng);
            err = 0;
            for (int i = 0; i < n; ++i)
                if (tree_predict(tree, x.row(i)) != y[size_t(i)]) err += w[size_t(i)];
            ++retries;
        }
        if (err >= chance) break; // no usable weak learner left

        if (err <= 0) {
            double eps = 1.0 / (2.0 * n);
            model.trees.push_back(std::move(tree));
            model.weights.push_back(std::log((1.0 - eps) / eps) + std::log(double(n_classes - 1)));
            model.round_errors.push_back(0.0);
            break; // perfect learner dominates
        }

        double beta = std::log((1.0 - err) / err) + std::log(double(n_classes - 1));
        for (int i = 0; i < n; ++i)
            if (tree_predict(tree, x.row(i)) != y[size_t(i)])
                w[size_t(i)] *= std::exp(beta);
        double sum = std::accumulate(w.begin(), w.end(), 0.0);
        for (double& v : w) v /= sum;

        model.trees.push_back(std::move(tree));
        model.weights.push_back(beta);
        model.round_errors.push_back(err);
    }
    if (model.trees.empty()) throw std::runtime_error("adaboost: no round produced a usable tree");
    return model;
}

int ensemble_predict(const TreeEnsembleModel& m, const double* x) {
    std::vector<double> score(size_t(m.n_classes), 0.0);
    for (size_t t = 0; t < m.trees.size(); ++t)
        score[size_t(tree_predict(m.trees[t], x))] += m.weights[t];
    int best = 0;
    for (int k = 1; k < m.n_classes; ++k)
        if (score[size_t(k)] > score[size_t(best)]) best = k;
    return best;
}

int ensemble_predict(const TreeEnsembleModel& m, const std::vector<double>& x) {
    if (int(x.size()) != m.dim && m.dim > 0)
        throw std::invalid_argument("ensemble_predict: dimension mismatch");
    return ensemble_predict(m, x.data());
}

std::vector<int> ensemble_predict(const TreeEnsembleModel& m, const Matrix& x, Exec policy) {
    std::vector<int> out(size_t(x.rows));
    parallel_for(x.rows, policy, [&](int i) { out[size_t(i)] = ensemble_predict(m, x.row(i)); });
    return out;
}

void save_ensemble(std::ostream& os, const TreeEnsembleModel& m) {
    char buf[64];
    auto put = [&](double v) {
        snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    os << "hep2-ensemble 1\n";
    os << "kind " << ensemble_kind_name(m.kind) << "\n";
    os << "classes " << m.n_classes << "\n";
    os << "dim " << m.dim << "\n";
    os << "oob ";
    put(m.oob_error);
    os << "\nntrees " << m.trees.size() << "\n";
    for (size_t t = 0; t < m.trees.size(); ++t) {
        os << "tree ";
        put(m.weights[t]);
        os << ' ' << m.trees[t].nodes.size() << '\n';
        for (const auto& node : m.trees[t].nodes) {
            if (node.leaf()) {
                os << "l";
                for (double c : node.counts) {
                    os << ' ';
                    put(c);
                }
                os << '\n';
            } else {
                os << "n " << node.feature << ' ';
                put(node.threshold);
                os << ' ' << node.left << ' ' << node.right << '\n';
            }
        }
    }
    os << "end\n";
}

TreeEnsembleModel load_ensemble(std::istream& is) {
    auto fail = [](const std::string& why) {
        throw std::runtime_error("ensemble load: " + why);
    };
    std::string tag, kind_name;
    int version = 0;
    if (!(is >> tag >> version)) fail("missing header");
    if (tag != "hep2-ensemble") fail("bad format tag '" + tag + "'");
    if (version != 1) fail("unsupported version " + std::to_string(version));
    TreeEnsembleModel m;
    auto expect = [&](const char* key) {
        std::string k;
        if (!(is >> k) || k != key) fail(std::string("expected field '") + key + "'");
    };
    expect("kind");
    if (!(is >> kind_name)) fail("bad kind");
    if (kind_name == "rf") m.kind = EnsembleKind::RandomForest;
    else if (kind_name == "ruf") m.kind = EnsembleKind::RandomUniformForest;
    else if (kind_name == "adaboost") m.kind = EnsembleKind::AdaBoost;
    else fail("unknown kind '" + kind_name + "'");
    expect("classes");
    if (!(is >> m.n_classes) || m.n_classes < 2) fail("bad class count");
    expect("dim");
    if (!(is >> m.dim) || m.dim < 0) fail("bad dim");
    expect("oob");
    if (!(is >> m.oob_error)) fail("bad oob");
    int ntrees = 0;
    expect("ntrees");
    if (!(is >> ntrees) || ntrees < 0) fail("bad ntrees");
    for (int t = 0; t < ntrees; ++t) {
        expect("tree");
        double weight;
        size_t nnodes;
        if (!(is >> weight >> nnodes)) fail("bad tree header");
        DecisionTree tree;
        tree.n_classes = m.n_classes;
        tree.nodes.resize(nnodes);
        for (size_t i = 0; i < nnodes; ++i) {
            std::string nk;
            if (!(is >> nk)) fail("truncated tree");
            if (nk == "l") {
                tree.nodes[i].counts.resize(size_t(m.n_classes));
                for (int k = 0; k < m.n_classes; ++k)
                    if (!(is >> tree.nodes[i].counts[size_t(k)])) fail("truncated leaf");
            } else if (nk == "n") {
                auto& nd = tree.nodes[i];
                if (!(is >> nd.feature >> nd.threshold >> nd.left >> nd.right))
                    fail("truncated node");
                if (nd.feature < 0 || nd.feature >= m.dim || nd.left < 0 || nd.right < 0 ||
                    nd.left >= int(nnodes) || nd.right >= int(nnodes))
                    fail("node out of range");
            } else {
                fail("unknown node tag '" + nk + "'");
            }
        }
        m.trees.push_back(std::move(tree));
        m.weights.push_back(weight);
    }
    std::string tail;
    if (!(is >> tail) || tail != "end") fail("missing end marker");
    return m;
}

} // namespace hep2
