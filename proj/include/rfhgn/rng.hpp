#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace rfhgn {

/// Seeded random source whose draws do not depend on the standard library's
/// distribution implementations (uniform and normal are derived from the raw
/// 64-bit engine output here).
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal (Box-Muller).
    double normal();
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent seed for a named sub-stream of an experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rfhgn
