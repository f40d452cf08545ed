#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>

namespace rainbow {

/// Purpose tags for derived sub-streams. Each (seed, attempt, iteration,
/// purpose) tuple gets its own generator, so e.g. zap coins never share draws
/// with edge choices.
enum class Stream : std::uint64_t {
    permutation = 1,
    mark = 2,
    zap = 3,
    diagnostics = 4,
    generator = 5,
    latin = 6,
    search = 7,
};

/// mt19937_64 wrapper with portable bounded-integer and unit-interval draws
/// (the standard distributions are implementation-defined, which would break
/// cross-platform reproducibility).
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent generator keyed by a seed and a path of labels.
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound);
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    template <class It>
    void shuffle(It first, It last) {
        const auto n = last - first;
        for (auto i = n - 1; i > 0; --i) {
            const auto j = static_cast<decltype(i)>(below(static_cast<std::uint64_t>(i) + 1));
            using std::swap;
            swap(first[i], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace rainbow
