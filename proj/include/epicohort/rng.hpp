#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace epicohort {

/// Seeded generator with a platform-stable sequence: std::mt19937_64 (whose
/// output is fixed by the standard) plus unbiased rejection sampling for
/// bounded draws. Library distributions are avoided because their output is
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below(0)");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            auto r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool chance(std::uint32_t numerator, std::uint32_t denominator) { return below(denominator) < numerator; }

    /// Index drawn with probability proportional to integer weights.
    std::size_t weighted(std::span<const std::uint64_t> weights) {
        std::uint64_t total = 0;
        for (auto w : weights) total += w;
        if (total == 0) throw std::invalid_argument("Rng::weighted: all weights zero");
        auto r = below(total);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (r < weights[i]) return i;
            r -= weights[i];
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace epicohort
