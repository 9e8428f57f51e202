#ifndef HEP2_PARALLEL_HPP
#define HEP2_PARALLEL_HPP

#include <exception>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hep2 {

/// Execution policy for the batch kernels. Every parallel kernel has a serial
/// reference path that must produce bit-identical results; tests compare them.
enum class Exec { Serial, Parallel };

/// Run fn(i) for i in [0, n). Results must not depend on execution order;
/// bodies write to disjoint locations only. Exceptions thrown by fn are
/// captured and the first one is rethrown after the loop joins.
template <typename F>
void parallel_for(int n, Exec policy, F&& fn) {
    if (policy == Exec::Serial || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
#ifdef _OPENMP
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
#else
    for (int i = 0; i < n; ++i) fn(i);
#endif
}

inline void set_max_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

} // namespace hep2

#endif
