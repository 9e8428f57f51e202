#include "hep2/frameworks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hep2/rng.hpp"

namespace hep2 {

namespace {

std::vector<std::pair<int, int>> all_pairs() {
    std::vector<std::pair<int, int>> p;
    for (int a = 0; a < kNumClasses; ++a)
        for (int b = a + 1; b < kNumClasses; ++b) p.emplace_back(a, b);
    return p;
}

// rows of the two classes, labels +1 for `pos`, -1 for `neg`
void pair_rows(const Matrix& x, const std::vector<int>& y, int pos, int neg, Matrix& out_x,
               std::vector<int>& out_y) {
    std::vector<int> idx;
    for (int r = 0; r < x.rows; ++r)
        if (y[size_t(r)] == pos || y[size_t(r)] == neg) idx.push_back(r);
    out_x = x.select_rows(idx);
    out_y.clear();
    out_y.reserve(idx.size());
    for (int r : idx) out_y.push_back(y[size_t(r)] == pos ? 1 : -1);
}

PairBlock train_pair_block(const Matrix& xtr, const std::vector<int>& ytr, const Matrix& xva,
                           const std::vector<int>& yva, int a, int b, const TrainGrid& grid) {
    Matrix bx, vx;
    std::vector<int> by, vy;
    pair_rows(xtr, ytr, a, b, bx, by);
    pair_rows(xva, yva, a, b, vx, vy);
    PairBlock block;
    block.a = a;
    block.b = b;
    block.tuning = grid_search(bx, by, vx, vy, grid, Exec::Serial);
    block.model = train_binary_svm(bx, by, block.tuning.c, KernelParams{block.tuning.gamma},
                                   grid.tol);
    return block;
}

std::vector<int> class_indices(const std::vector<int>& y, int cls) {
    std::vector<int> out;
    for (int r = 0; r < int(y.size()); ++r)
        if (y[size_t(r)] == cls) out.push_back(r);
    return out;
}

// balanced binary task for one-vs-rest block i
void ovr_task(const Matrix& x, const std::vector<int>& y, int cls, uint64_t seed, Matrix& out_x,
              std::vector<int>& out_y) {
    std::vector<int> counts(size_t(kNumClasses), 0);
    for (int v : y) ++counts[size_t(v)];
    if (counts[size_t(cls)] == 0) throw std::invalid_argument("ovr: class absent from split");
    auto draws = balanced_negative_sample(counts, cls);
    Rng rng(seed);
    std::vector<int> rows = class_indices(y, cls);
    for (int j = 0; j < kNumClasses; ++j) {
        if (j == cls || draws[size_t(j)] == 0) continue;
        auto pool = class_indices(y, j);
        rng.shuffle(pool);
        pool.resize(size_t(draws[size_t(j)]));
        rows.insert(rows.end(), pool.begin(), pool.end());
    }
    out_x = x.select_rows(rows);
    out_y.clear();
    for (int r : rows) out_y.push_back(y[size_t(r)] == cls ? 1 : -1);
}

double balanced_accuracy(const SvmModel& m, const Matrix& xva, const std::vector<int>& yva) {
    int na = 0, nb = 0, ca = 0, cb = 0;
    for (int r = 0; r < xva.rows; ++r) {
        int pred = decision_score(m, xva.row(r), xva.cols) >= 0 ? 1 : -1;
        if (yva[size_t(r)] == 1) {
            ++na;
            ca += pred == 1;
        } else {
            ++nb;
            cb += pred == -1;
        }
    }
    double aa = na ? double(ca) / na : 0.0;
    double ab = nb ? double(cb) / nb : 0.0;
    return (aa + ab) / 2.0;
}

} // namespace

const char* framework_kind_name(FrameworkKind k) {
    switch (k) {
        case FrameworkKind::OneVsOne: return "ovo";
        case FrameworkKind::OneVsRest: return "ovr";
        case FrameworkKind::HierCascade: return "cascade";
        case FrameworkKind::HierCommon: return "common-hier";
        case FrameworkKind::TreeEnsemble: return "tree";
    }
    return "?";
}

const char* resolver_kind_name(ResolverKind k) {
    switch (k) {
        case ResolverKind::None: return "none";
        case ResolverKind::SvmScore: return "score";
        case ResolverKind::AvgSvmScore: return "avg-score";
        case ResolverKind::PairwiseBlocks: return "pairwise";
    }
    return "?";
}

FrameworkModel train_one_vs_one(const Matrix& x_train, const std::vector<int>& y_train,
                                const Matrix& x_val, const std::vector<int>& y_val,
                                const TrainGrid& grid, Exec policy) {
    FrameworkModel m;
    m.kind = FrameworkKind::OneVsOne;
    auto pairs = all_pairs();
    m.pair_blocks.resize(pairs.size());
    parallel_for(int(pairs.size()), policy, [&](int p) {
        m.pair_blocks[size_t(p)] = train_pair_block(x_train, y_train, x_val, y_val,
                                                    pairs[size_t(p)].first,
                                                    pairs[size_t(p)].second, grid);
    });
    return m;
}

std::vector<int> balanced_negative_sample(const std::vector<int>& counts, int target_class) {
    const int k = int(counts.size());
    if (target_class < 0 || target_class >= k)
        throw std::invalid_argument("balanced_negative_sample: bad class");
    long long others = 0;
    for (int j = 0; j < k; ++j)
        if (j != target_class) others += counts[size_t(j)];
    if (others <= 0) throw std::invalid_argument("balanced_negative_sample: no negatives");
    const int want = counts[size_t(target_class)];
    double alpha = std::min(1.0, double(want) / double(others));
    std::vector<int> draws(size_t(k), 0);
    int total = 0;
    for (int j = 0; j < k; ++j) {
        if (j == target_class) continue;
        draws[size_t(j)] = int(std::llround(alpha * counts[size_t(j)]));
        total += draws[size_t(j)];
    }
    int target_total = int(std::min<long long>(want, others));
    int diff = target_total - total;
    if (diff != 0) {
        // correct the rounding residue on the largest other class (then the
        // next largest, if clamping to the class size leaves a remainder)
        std::vector<int> order;
        for (int j = 0; j < k; ++j)
            if (j != target_class) order.push_back(j);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (counts[size_t(a)] != counts[size_t(b)]) return counts[size_t(a)] > counts[size_t(b)];
            return a < b;
        });
        for (int j : order) {
            if (diff == 0) break;
            int room = diff > 0 ? counts[size_t(j)] - draws[size_t(j)] : draws[size_t(j)];
            int step = std::min(std::abs(diff), room);
            draws[size_t(j)] += diff > 0 ? step : -step;
            diff += diff > 0 ? -step : step;
        }
    }
    return draws;
}

FrameworkModel train_one_vs_rest(const Matrix& x_train, const std::vector<int>& y_train,
                                 const Matrix& x_val, const std::vector<int>& y_val,
                                 const TrainGrid& grid, uint64_t seed, Exec policy) {
    FrameworkModel m;
    m.kind = FrameworkKind::OneVsRest;
    m.resolver = ResolverKind::SvmScore;
    m.rest_blocks.resize(kNumClasses);
    m.rest_tuning.resize(kNumClasses);
    Rng master(seed);
    std::vector<uint64_t> train_seeds(kNumClasses), val_seeds(kNumClasses);
    for (int i = 0; i < kNumClasses; ++i) {
        train_seeds[size_t(i)] = master.next_u64();
        val_seeds[size_t(i)] = master.next_u64();
    }
    parallel_for(kNumClasses, policy, [&](int i) {
        Matrix bx, vx;
        std::vector<int> by, vy;
        ovr_task(x_train, y_train, i, train_seeds[size_t(i)], bx, by);
        ovr_task(x_val, y_val, i, val_seeds[size_t(i)], vx, vy);
        m.rest_tuning[size_t(i)] = grid_search(bx, by, vx, vy, grid, Exec::Serial);
        m.rest_blocks[size_t(i)] =
            train_binary_svm(bx, by, m.rest_tuning[size_t(i)].c,
                             KernelParams{m.rest_tuning[size_t(i)].gamma}, grid.tol);
    });
    return m;
}

FrameworkModel train_hier_common(const Matrix& x_train, const std::vector<int>& y_train,
                                 const Matrix& x_val, const std::vector<int>& y_val,
                                 const TrainGrid& grid, Exec policy) {
    FrameworkModel m;
    m.kind = FrameworkKind::HierCommon;
    m.resolver = ResolverKind::AvgSvmScore;
    m.hier_blocks.resize(kNumClasses);
    struct Task {
        int owner, opponent;
    };
    std::vector<Task> tasks;
    for (int i = 0; i < kNumClasses; ++i) {
        m.hier_blocks[size_t(i)].owner = i;
        m.hier_blocks[size_t(i)].subs.resize(kNumClasses - 1);
        int slot = 0;
        for (int j = 0; j < kNumClasses; ++j) {
            if (j == i) continue;
            m.hier_blocks[size_t(i)].subs[size_t(slot)].opponent = j;
            tasks.push_back({i, j});
            ++slot;
        }
    }
    parallel_for(int(tasks.size()), policy, [&](int t) {
        int i = tasks[size_t(t)].owner, j = tasks[size_t(t)].opponent;
        PairBlock pb = train_pair_block(x_train, y_train, x_val, y_val, i, j, grid);
        int slot = j < i ? j : j - 1;
        SubBlock& sub = m.hier_blocks[size_t(i)].subs[size_t(slot)];
        sub.model = std::move(pb.model);
        sub.tuning = pb.tuning;
    });
    return m;
}

std::vector<std::vector<int>> cascade_candidate_subsets(int pool_size) {
    std::vector<std::vector<int>> out;
    for (int sz = 3; sz <= 6; ++sz) {
        std::vector<int> pick(size_t(sz), 0);
        // lexicographic combinations of `sz` positions out of pool_size
        std::iota(pick.begin(), pick.end(), 0);
        while (true) {
            out.push_back(pick);
            int i = sz - 1;
            while (i >= 0 && pick[size_t(i)] == pool_size - sz + i) --i;
            if (i < 0) break;
            ++pick[size_t(i)];
            for (int j = i + 1; j < sz; ++j) pick[size_t(j)] = pick[size_t(j - 1)] + 1;
        }
    }
    return out;
}

FrameworkModel train_cascade(const Matrix& pool_train, const std::vector<int>& y_train,
                             const Matrix& pool_val, const std::vector<int>& y_val,
                             const TrainGrid& grid, Exec policy) {
    FrameworkModel m;
    m.kind = FrameworkKind::HierCascade;
    m.resolver = ResolverKind::AvgSvmScore;
    m.first_kind = FeatureSetKind::ScalarPool;
    m.hier_blocks.resize(kNumClasses);

    struct Task {
        int owner, opponent;
        std::vector<int> pool_cols; // 8 candidate columns
        Matrix btx, bvx;            // pair rows, all pool columns
        std::vector<int> bty, bvy;
    };
    std::vector<Task> tasks;
    for (int i = 0; i < kNumClasses; ++i) {
        m.hier_blocks[size_t(i)].owner = i;
        for (int j = 0; j < kNumClasses; ++j) {
            if (j == i) continue;
            Task t;
            t.owner = i;
            t.opponent = j;
            for (int k = 0; k < 3; ++k) t.pool_cols.push_back(scalar_pool_slot(i, k));
            for (int k = 0; k < 3; ++k) t.pool_cols.push_back(scalar_pool_slot(j, k));
            t.pool_cols.push_back(3 * kNumClasses);     // masked mean
            t.pool_cols.push_back(3 * kNumClasses + 1); // masked variance
            pair_rows(pool_train, y_train, i, j, t.btx, t.bty);
            pair_rows(pool_val, y_val, i, j, t.bvx, t.bvy);
            tasks.push_back(std::move(t));
        }
    }

    const auto subsets = cascade_candidate_subsets(8);
    const int ns = int(subsets.size());
    // flat (task, subset) search space; each cell records balanced accuracy
    std::vector<double> balanced(tasks.size() * size_t(ns), -1.0);
    std::vector<GridSearchResult> tunings(tasks.size() * size_t(ns));
    parallel_for(int(tasks.size()) * ns, policy, [&](int cell) {
        const Task& t = tasks[size_t(cell / ns)];
        const auto& subset = subsets[size_t(cell % ns)];
        std::vector<int> cols;
        for (int p : subset) cols.push_back(t.pool_cols[size_t(p)]);
        Matrix sx = t.btx.select_cols(cols);
        Matrix vx = t.bvx.select_cols(cols);
        try {
            GridSearchResult gr = grid_search(sx, t.bty, vx, t.bvy, grid, Exec::Serial);
            SvmModel mm = train_binary_svm(sx, t.bty, gr.c, KernelParams{gr.gamma}, grid.tol);
            balanced[size_t(cell)] = balanced_accuracy(mm, vx, t.bvy);
            tunings[size_t(cell)] = gr;
        } catch (const ConvergenceError&) {
            // leave the cell unusable
        }
    });

    for (size_t ti = 0; ti < tasks.size(); ++ti) {
        const Task& t = tasks[ti];
        int best = -1;
        for (int s = 0; s < ns; ++s) {
            double acc = balanced[ti * size_t(ns) + size_t(s)];
            if (acc < 0) continue;
            if (best < 0 || acc > balanced[ti * size_t(ns) + size_t(best)]) best = s;
            // enumeration order already prefers smaller, lexicographically
            // earlier subsets on ties
        }
        if (best < 0) throw std::runtime_error("cascade: no usable subset for a sub-block");
        SubBlock sub;
        sub.opponent = t.opponent;
        for (int p : subsets[size_t(best)]) sub.subset.push_back(t.pool_cols[size_t(p)]);
        sub.tuning = tunings[ti * size_t(ns) + size_t(best)];
        Matrix sx = t.btx.select_cols(sub.subset);
        sub.model = train_binary_svm(sx, t.bty, sub.tuning.c, KernelParams{sub.tuning.gamma},
                                     grid.tol);
        sub.val_balanced_accuracy = balanced[ti * size_t(ns) + size_t(best)];
        m.hier_blocks[size_t(t.owner)].subs.push_back(std::move(sub));
    }
    return m;
}

FrameworkModel make_tree_framework(TreeEnsembleModel ensemble) {
    FrameworkModel m;
    m.kind = FrameworkKind::TreeEnsemble;
    m.ensemble = std::move(ensemble);
    return m;
}

void attach_pairwise_resolver(FrameworkModel& model, const Matrix& x_train,
                              const std::vector<int>& y_train, const Matrix& x_val,
                              const std::vector<int>& y_val, const TrainGrid& grid, Exec policy) {
    if (model.kind == FrameworkKind::OneVsOne || model.kind == FrameworkKind::TreeEnsemble)
        throw std::invalid_argument("pairwise resolver: framework has no ambiguity stage");
    auto pairs = all_pairs();
    model.second_stage.resize(pairs.size());
    parallel_for(int(pairs.size()), policy, [&](int p) {
        model.second_stage[size_t(p)] = train_pair_block(
            x_train, y_train, x_val, y_val, pairs[size_t(p)].first, pairs[size_t(p)].second, grid);
    });
    model.resolver = ResolverKind::PairwiseBlocks;
}

int resolve_ovo_votes(const std::vector<int>& votes, const std::vector<double>& sum_scores) {
    int best_votes = -1;
    for (int v : votes) best_votes = std::max(best_votes, v);
    int winner = -1;
    for (int c = 0; c < int(votes.size()); ++c) {
        if (votes[size_t(c)] != best_votes) continue;
        if (winner < 0 || sum_scores[size_t(c)] > sum_scores[size_t(winner)]) winner = c;
    }
    return winner;
}

FirstStageOutcome first_stage_accepts(const FrameworkModel& m, const std::vector<double>& x) {
    FirstStageOutcome o;
    o.accepted.assign(kNumClasses, 0);
    o.score.assign(kNumClasses, 0.0);
    switch (m.kind) {
        case FrameworkKind::OneVsOne: {
            std::vector<int> votes(kNumClasses, 0);
            for (const auto& b : m.pair_blocks) {
                double s = decision_score(b.model, x);
                ++votes[size_t(s >= 0 ? b.a : b.b)];
                o.score[size_t(b.a)] += s;
                o.score[size_t(b.b)] -= s;
            }
            int w = resolve_ovo_votes(votes, o.score);
            o.accepted[size_t(w)] = 1;
            break;
        }
        case FrameworkKind::OneVsRest: {
            for (int i = 0; i < kNumClasses; ++i) {
                double s = decision_score(m.rest_blocks[size_t(i)], x);
                o.score[size_t(i)] = s;
                o.accepted[size_t(i)] = s >= 0;
            }
            break;
        }
        case FrameworkKind::HierCascade:
        case FrameworkKind::HierCommon: {
            for (const auto& block : m.hier_blocks) {
                bool all = true;
                double sum = 0;
                for (const auto& sub : block.subs) {
                    double s;
                    if (sub.subset.empty()) {
                        s = decision_score(sub.model, x);
                    } else {
                        std::vector<double> xs;
                        xs.reserve(sub.subset.size());
                        for (int cidx : sub.subset) xs.push_back(x[size_t(cidx)]);
                        s = decision_score(sub.model, xs);
                    }
                    all = all && s >= 0;
                    sum += s;
                }
                o.score[size_t(block.owner)] = sum / double(block.subs.size());
                o.accepted[size_t(block.owner)] = all;
            }
            break;
        }
        case FrameworkKind::TreeEnsemble: {
            int w = ensemble_predict(m.ensemble, x);
            o.accepted[size_t(w)] = 1;
            o.score[size_t(w)] = 1.0;
            break;
        }
    }
    return o;
}

int resolve_by_score(const FirstStageOutcome& o) {
    int best = -1;
    for (int c = 0; c < int(o.accepted.size()); ++c) {
        if (!o.accepted[size_t(c)]) continue;
        if (best < 0 || o.score[size_t(c)] > o.score[size_t(best)]) best = c;
    }
    return best;
}

int resolve_pairwise(const FrameworkModel& m, const FirstStageOutcome& o,
                     const std::vector<double>& x_second) {
    if (m.second_stage.empty())
        throw std::runtime_error("resolve_pairwise: second-stage blocks not trained");
    std::vector<int> amb;
    for (int c = 0; c < int(o.accepted.size()); ++c)
        if (o.accepted[size_t(c)]) amb.push_back(c);
    if (amb.empty()) return -1;
    if (amb.size() == 1) return amb[0];

    auto block_vote = [&](int a, int b) {
        for (const auto& pb : m.second_stage)
            if (pb.a == a && pb.b == b)
                return decision_score(pb.model, x_second) >= 0 ? a : b;
        throw std::runtime_error("resolve_pairwise: missing block");
    };
    if (amb.size() == 2) return block_vote(amb[0], amb[1]);

    int winner = -1;
    for (int c : amb) {
        bool wins_all = true;
        for (int d : amb) {
            if (d == c) continue;
            int v = block_vote(std::min(c, d), std::max(c, d));
            if (v != c) {
                wins_all = false;
                break;
            }
        }
        if (wins_all) {
            winner = c;
            break;
        }
    }
    return winner >= 0 ? winner : resolve_by_score(o);
}

Prediction predict(const FrameworkModel& m, const std::vector<double>& x_first,
                   const std::vector<double>& x_second) {
    Prediction p;
    p.first = first_stage_accepts(m, x_first);
    switch (m.resolver) {
        case ResolverKind::None: {
            int only = -1;
            int n = 0;
            for (int c = 0; c < int(p.first.accepted.size()); ++c)
                if (p.first.accepted[size_t(c)]) {
                    only = c;
                    ++n;
                }
            p.final_class = n == 1 ? only : -1;
            break;
        }
        case ResolverKind::SvmScore:
        case ResolverKind::AvgSvmScore:
            p.final_class = resolve_by_score(p.first);
            break;
        case ResolverKind::PairwiseBlocks:
            p.final_class = resolve_pairwise(m, p.first, x_second);
            break;
    }
    return p;
}

} // namespace hep2
