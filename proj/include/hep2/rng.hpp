#ifndef HEP2_RNG_HPP
#define HEP2_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace hep2 {

/// Deterministic PRNG with hand-rolled distributions so that streams are
/// reproducible across standard libraries and platforms.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // warm up so that nearby seeds diverge immediately
        next_u64();
        next_u64();
    }

    /// splitmix64 step
    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// uniform integer in [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        uint64_t span = uint64_t(hi - lo) + 1;
        return lo + int(next_u64() % span);
    }

    /// uniform double in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// uniform double in [a, b)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    /// Fisher-Yates shuffle
    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (int i = int(xs.size()) - 1; i > 0; --i) {
            int j = uniform_int(0, i);
            std::swap(xs[size_t(i)], xs[size_t(j)]);
        }
    }

    /// k distinct indices drawn from [0, n)
    std::vector<int> sample_without_replacement(int n, int k, std::vector<int> pool = {}) {
        if (pool.empty()) {
            pool.resize(size_t(n));
            for (int i = 0; i < n; ++i) pool[size_t(i)] = i;
        }
        shuffle(pool);
        pool.resize(size_t(k));
        return pool;
    }

    /// Derive an independent child seed; deterministic in (current seed, tag).
    uint64_t child_seed(uint64_t tag) {
        uint64_t z = state_ ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        return z ^ (z >> 27);
    }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace hep2

#endif
