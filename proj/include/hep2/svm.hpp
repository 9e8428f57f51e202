#ifndef HEP2_SVM_HPP
#define HEP2_SVM_HPP

#include <cmath>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "hep2/matrix.hpp"
#include "hep2/parallel.hpp"

namespace hep2 {

struct KernelParams {
    double gamma = 0.01; // RBF width
};

inline double rbf_kernel(const double* a, const double* b, int dim, double gamma) {
    double d2 = 0;
    for (int i = 0; i < dim; ++i) {
        double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

/// Trained soft-margin binary SVM. coef[i] = alpha_i * y_i for each stored
/// support vector.
struct SvmModel {
    KernelParams kernel;
    double c = 1.0;
    double bias = 0.0;
    Matrix support_vectors;
    std::vector<double> coef;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Solver internals exposed for diagnostics and tests.
struct SmoDiagnostics {
    std::vector<double> alpha;
    int iterations = 0;
    double gap = 0.0; // final maximal-violating-pair gap
};

/// Sequential minimal optimization with maximal-violating-pair working-set
/// selection. Labels must be +1/-1 with both classes present. Deterministic
/// given input order. Throws ConvergenceError when the iteration cap is hit
/// (cap = max(100000, 200 * n) when max_iter == 0).
SvmModel train_binary_svm(const Matrix& x, const std::vector<int>& y, double c,
                          KernelParams kernel, double tol = 1e-3, int max_iter = 0,
                          SmoDiagnostics* diag = nullptr);

double decision_score(const SvmModel& m, const std::vector<double>& x);
double decision_score(const SvmModel& m, const double* x, int dim);

/// Sign of the decision score; a score of exactly 0 maps to +1.
int predict_binary(const SvmModel& m, const std::vector<double>& x);

/// Scores for every row of x.
std::vector<double> decision_scores(const SvmModel& m, const Matrix& x,
                                    Exec policy = Exec::Serial);

/// Dual objective sum(alpha) - 1/2 sum alpha_i alpha_j y_i y_j K_ij.
double dual_objective(const Matrix& x, const std::vector<int>& y, KernelParams kernel,
                      const std::vector<double>& alpha);

/// Largest KKT violation over all training samples for the given solution.
double kkt_max_violation(const Matrix& x, const std::vector<int>& y, double c,
                         KernelParams kernel, const std::vector<double>& alpha, double bias);

struct TrainGrid {
    std::vector<double> c_values{1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9};
    std::vector<double> gamma_values{0.001, 0.005, 0.01, 0.05, 0.1};
    double tol = 1e-3;
};

struct GridSearchResult {
    double c = 0.0;
    double gamma = 0.0;
    double val_accuracy = 0.0;
};

/// Exhaustive grid search maximizing validation accuracy. Ties prefer the
/// smaller C, then the smaller gamma. Cells that fail to converge are skipped;
/// if every cell fails the last error is rethrown.
GridSearchResult grid_search(const Matrix& x_train, const std::vector<int>& y_train,
                             const Matrix& x_val, const std::vector<int>& y_val,
                             const TrainGrid& grid, Exec policy = Exec::Serial);

void save_svm(std::ostream& os, const SvmModel& m);
SvmModel load_svm(std::istream& is);

} // namespace hep2

#endif
