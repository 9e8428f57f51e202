#include "hep2/svm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>

namespace hep2 {

namespace {

void validate_training_input(const Matrix& x, const std::vector<int>& y, double c) {
    if (x.rows < 2) throw std::invalid_argument("svm: need at least 2 training samples");
    if (int(y.size()) != x.rows) throw std::invalid_argument("svm: label count mismatch");
    if (!(c > 0)) throw std::invalid_argument("svm: C must be positive");
    bool pos = false, neg = false;
    for (int v : y) {
        if (v == 1) pos = true;
        else if (v == -1) neg = true;
        else throw std::invalid_argument("svm: labels must be +1 or -1");
    }
    if (!pos || !neg) throw std::invalid_argument("svm: training data has a single class");
    for (double v : x.v)
        if (!std::isfinite(v)) throw std::invalid_argument("svm: non-finite feature value");
}

} // namespace

SvmModel train_binary_svm(const Matrix& x, const std::vector<int>& y, double c,
                          KernelParams kernel, double tol, int max_iter,
                          SmoDiagnostics* diag) {
    validate_training_input(x, y, c);
    if (!(kernel.gamma > 0)) throw std::invalid_argument("svm: gamma must be positive");
    if (!(tol > 0)) throw std::invalid_argument("svm: tol must be positive");
    const int n = x.rows;
    if (max_iter == 0) max_iter = std::max(100000, 200 * n);

    // full kernel matrix; problem sizes here stay small enough
    std::vector<double> k(size_t(n) * size_t(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            double v = rbf_kernel(x.row(i), x.row(j), x.cols, kernel.gamma);
            k[size_t(i) * n + j] = v;
            k[size_t(j) * n + i] = v;
        }

    std::vector<double> alpha(size_t(n), 0.0);
    std::vector<double> grad(size_t(n), -1.0); // gradient of 1/2 a'Qa - e'a
    auto in_up = [&](int i) { return y[size_t(i)] > 0 ? alpha[size_t(i)] < c : alpha[size_t(i)] > 0; };
    auto in_low = [&](int i) { return y[size_t(i)] > 0 ? alpha[size_t(i)] > 0 : alpha[size_t(i)] < c; };

    int iter = 0;
    double gap = std::numeric_limits<double>::infinity();
    while (true) {
        int wi = -1, wj = -1;
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            double v = -y[size_t(i)] * grad[size_t(i)];
            if (in_up(i) && v > m_up) {
                m_up = v;
                wi = i;
            }
            if (in_low(i) && v < m_low) {
                m_low = v;
                wj = i;
            }
        }
        gap = m_up - m_low;
        if (wi < 0 || wj < 0 || gap <= tol) break;
        if (++iter > max_iter) throw ConvergenceError("svm: iteration cap exceeded");

        const int yi = y[size_t(wi)], yj = y[size_t(wj)];
        const double* ki = &k[size_t(wi) * n];
        const double* kj = &k[size_t(wj) * n];
        double eta = ki[wi] + kj[wj] - 2.0 * ki[wj];
        eta = std::max(eta, 1e-12);
        // move along alpha_i += yi*d, alpha_j -= yj*d
        double d = gap / eta;
        auto range = [&](int idx, int sign) {
            // permissible d so that alpha_idx + sign*d stays in [0, C]
            double lo, hi;
            if (sign > 0) {
                lo = -alpha[size_t(idx)];
                hi = c - alpha[size_t(idx)];
            } else {
                lo = alpha[size_t(idx)] - c;
                hi = alpha[size_t(idx)];
            }
            return std::pair<double, double>(lo, hi);
        };
        auto [lo1, hi1] = range(wi, yi);
        auto [lo2, hi2] = range(wj, -yj);
        d = std::min(d, std::min(hi1, hi2));
        d = std::max(d, std::max(lo1, lo2));
        if (d == 0.0) break; // numerically stuck at the box

        alpha[size_t(wi)] += yi * d;
        alpha[size_t(wj)] -= yj * d;
        double dai = yi * d, daj = -yj * d;
        for (int t = 0; t < n; ++t)
            grad[size_t(t)] += y[size_t(t)] * (ki[t] * yi * dai + kj[t] * yj * daj);
    }

    // bias from free support vectors, falling back to the violating-pair midpoint
    double bsum = 0;
    int bcount = 0;
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double v = -y[size_t(i)] * grad[size_t(i)]; // equals y_i - s_i
        if (alpha[size_t(i)] > 0 && alpha[size_t(i)] < c) {
            bsum += v;
            ++bcount;
        }
        if (in_up(i)) m_up = std::max(m_up, v);
        if (in_low(i)) m_low = std::min(m_low, v);
    }
    double bias = bcount > 0 ? bsum / bcount : (m_up + m_low) / 2.0;

    SvmModel model;
    model.kernel = kernel;
    model.c = c;
    model.bias = bias;
    std::vector<int> sv;
    for (int i = 0; i < n; ++i)
        if (alpha[size_t(i)] > 0) sv.push_back(i);
    model.support_vectors = x.select_rows(sv);
    model.coef.reserve(sv.size());
    for (int i : sv) model.coef.push_back(alpha[size_t(i)] * y[size_t(i)]);

    if (diag) {
        diag->alpha = std::move(alpha);
        diag->iterations = iter;
        diag->gap = gap;
    }
    return model;
}

double decision_score(const SvmModel& m, const double* x, int dim) {
    if (dim != m.support_vectors.cols && m.support_vectors.rows > 0)
        throw std::invalid_argument("decision_score: dimension mismatch");
    double s = m.bias;
    for (int i = 0; i < m.support_vectors.rows; ++i)
        s += m.coef[size_t(i)] * rbf_kernel(m.support_vectors.row(i), x, dim, m.kernel.gamma);
    return s;
}

double decision_score(const SvmModel& m, const std::vector<double>& x) {
    return decision_score(m, x.data(), int(x.size()));
}

int predict_binary(const SvmModel& m, const std::vector<double>& x) {
    return decision_score(m, x) >= 0.0 ? 1 : -1;
}

std::vector<double> decision_scores(const SvmModel& m, const Matrix& x, Exec policy) {
    std::vector<double> out(size_t(x.rows));
    parallel_for(x.rows, policy, [&](int i) { out[size_t(i)] = decision_score(m, x.row(i), x.cols); });
    return out;
}

double dual_objective(const Matrix& x, const std::vector<int>& y, KernelParams kernel,
                      const std::vector<double>& alpha) {
    const int n = x.rows;
    double obj = 0;
    for (int i = 0; i < n; ++i) obj += alpha[size_t(i)];
    for (int i = 0; i < n; ++i) {
        if (alpha[size_t(i)] == 0) continue;
        for (int j = 0; j < n; ++j) {
            if (alpha[size_t(j)] == 0) continue;
            obj -= 0.5 * alpha[size_t(i)] * alpha[size_t(j)] * y[size_t(i)] * y[size_t(j)] *
                   rbf_kernel(x.row(i), x.row(j), x.cols, kernel.gamma);
        }
    }
    return obj;
}

double kkt_max_violation(const Matrix& x, const std::vector<int>& y, double c,
                         KernelParams kernel, const std::vector<double>& alpha, double bias) {
    const int n = x.rows;
    double worst = 0;
    for (int i = 0; i < n; ++i) {
        double s = bias;
        for (int j = 0; j < n; ++j)
            if (alpha[size_t(j)] != 0)
                s += alpha[size_t(j)] * y[size_t(j)] *
                     rbf_kernel(x.row(j), x.row(i), x.cols, kernel.gamma);
        double margin = y[size_t(i)] * s;
        double a = alpha[size_t(i)];
        double v = 0;
        if (a <= 1e-12) v = std::max(0.0, 1.0 - margin);
        else if (a >= c - 1e-12 * c) v = std::max(0.0, margin - 1.0);
        else v = std::abs(margin - 1.0);
        worst = std::max(worst, v);
    }
    return worst;
}

GridSearchResult grid_search(const Matrix& x_train, const std::vector<int>& y_train,
                             const Matrix& x_val, const std::vector<int>& y_val,
                             const TrainGrid& grid, Exec policy) {
    if (x_val.rows == 0 || int(y_val.size()) != x_val.rows)
        throw std::invalid_argument("grid_search: bad validation set");
    if (grid.c_values.empty() || grid.gamma_values.empty())
        throw std::invalid_argument("grid_search: empty grid");
    const int nc = int(grid.c_values.size());
    const int ng = int(grid.gamma_values.size());
    std::vector<double> acc(size_t(nc) * size_t(ng), -1.0);
    std::exception_ptr last_err = nullptr;
    std::mutex err_mx;

    parallel_for(nc * ng, policy, [&](int cell) {
        int ci = cell / ng, gi = cell % ng;
        try {
            SvmModel m = train_binary_svm(x_train, y_train, grid.c_values[size_t(ci)],
                                          KernelParams{grid.gamma_values[size_t(gi)]}, grid.tol);
            int correct = 0;
            for (int r = 0; r < x_val.rows; ++r) {
                int pred = decision_score(m, x_val.row(r), x_val.cols) >= 0.0 ? 1 : -1;
                correct += pred == y_val[size_t(r)];
            }
            acc[size_t(cell)] = double(correct) / x_val.rows;
        } catch (const ConvergenceError&) {
            std::lock_guard<std::mutex> lock(err_mx);
            last_err = std::current_exception();
        }
    });

    GridSearchResult best;
    best.val_accuracy = -1.0;
    for (int ci = 0; ci < nc; ++ci)
        for (int gi = 0; gi < ng; ++gi) {
            double a = acc[size_t(ci) * ng + gi];
            if (a > best.val_accuracy) {
                best.val_accuracy = a;
                best.c = grid.c_values[size_t(ci)];
                best.gamma = grid.gamma_values[size_t(gi)];
            }
        }
    if (best.val_accuracy < 0) {
        if (last_err) std::rethrow_exception(last_err);
        throw ConvergenceError("grid_search: no cell converged");
    }
    return best;
}

void save_svm(std::ostream& os, const SvmModel& m) {
    char buf[64];
    auto put = [&](double v) {
        snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    os << "hep2-svm 1\n";
    os << "gamma ";
    put(m.kernel.gamma);
    os << "\nc ";
    put(m.c);
    os << "\nbias ";
    put(m.bias);
    os << "\ndim " << m.support_vectors.cols << "\nnsv " << m.support_vectors.rows << "\n";
    for (int i = 0; i < m.support_vectors.rows; ++i) {
        put(m.coef[size_t(i)]);
        for (int c = 0; c < m.support_vectors.cols; ++c) {
            os << ' ';
            put(m.support_vectors.at(i, c));
        }
        os << '\n';
    }
    os << "end\n";
}

SvmModel load_svm(std::istream& is) {
    auto fail = [](const std::string& why) -> SvmModel {
        throw std::runtime_error("svm load: " + why);
    };
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version)) return fail("missing header");
    if (tag != "hep2-svm") return fail("bad format tag '" + tag + "'");
    if (version != 1) return fail("unsupported version " + std::to_string(version));
    SvmModel m;
    int dim = 0, nsv = 0;
    auto expect = [&](const char* key) {
        std::string k;
        if (!(is >> k) || k != key) fail(std::string("expected field '") + key + "'");
    };
    expect("gamma");
    if (!(is >> m.kernel.gamma)) fail("bad gamma");
    expect("c");
    if (!(is >> m.c)) fail("bad c");
    expect("bias");
    if (!(is >> m.bias)) fail("bad bias");
    expect("dim");
    if (!(is >> dim) || dim < 0) fail("bad dim");
    expect("nsv");
    if (!(is >> nsv) || nsv < 0) fail("bad nsv");
    m.support_vectors = Matrix(nsv, dim);
    m.coef.resize(size_t(nsv));
    for (int i = 0; i < nsv; ++i) {
        if (!(is >> m.coef[size_t(i)])) fail("truncated support vectors");
        for (int c = 0; c < dim; ++c)
            if (!(is >> m.support_vectors.at(i, c))) fail("truncated support vectors");
    }
    std::string tail;
    if (!(is >> tail) || tail != "end") fail("missing end marker");
    return m;
}

} // namespace hep2
