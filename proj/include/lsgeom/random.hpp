#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace lsgeom {

/// Settings shared by every Monte Carlo routine.
///
/// Sample i of a computation always draws from the stream keyed by
/// (seed, label, i), so results do not depend on `threads`.
struct McOptions {
    std::uint64_t samples = 100000;
    std::uint64_t seed = 0;
    unsigned threads = 0;  ///< 0 means std::thread::hardware_concurrency()
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stable 64-bit key for a labelled sub-stream of a root seed.
std::uint64_t derive_key(std::uint64_t seed, std::string_view label) noexcept;

/// Key of the `index`-th child of `key`.
constexpr std::uint64_t child_key(std::uint64_t key, std::uint64_t index) noexcept
{
    return mix64(key ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: the state is a key and a counter, each draw hashes both.
/// Satisfies UniformRandomBitGenerator.
class CounterStream {
public:
    using result_type = std::uint64_t;

    explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}
    CounterStream(std::uint64_t key, std::uint64_t index) noexcept : key_(child_key(key, index)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Fills `out` with independent standard normals.
    template <class Vec>
    void fill_normal(Vec&& out)
    {
        std::normal_distribution<double> normal;
        for (auto& x : out) x = normal(*this);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Resolves a requested thread count (0 = hardware concurrency, never less than 1).
unsigned resolve_threads(unsigned requested) noexcept;

/// Runs body(i) for i in [0, count) on up to `threads` worker threads.
/// Each index is visited exactly once; exceptions are rethrown on the caller.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Mean and standard error of a Monte Carlo average.
struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
};

/// Averages a vector-valued per-sample function.
///
/// `sample(i, out)` must write `dim` values for sample i. Samples are summed in
/// fixed blocks that are combined in index order, so the result is bitwise
/// identical for any thread count.
std::vector<MeanEstimate> mc_moments(
    std::uint64_t samples, unsigned threads, std::size_t dim,
    const std::function<void(std::uint64_t, std::span<double>)>& sample);

/// Scalar convenience wrapper around mc_moments.
MeanEstimate mc_mean(
    std::uint64_t samples, unsigned threads, const std::function<double(std::uint64_t)>& sample);

}  // namespace lsgeom
