#include "lsgeom/random.hpp"

#include "lsgeom/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace lsgeom {

namespace {

constexpr std::uint64_t kBlockSize = 4096;

// Running mean and centered second moment for one block.
struct BlockMoments {
    std::uint64_t count = 0;
    std::vector<double> mean;
    std::vector<double> m2;
};

}  // namespace

std::uint64_t derive_key(std::uint64_t seed, std::string_view label) noexcept
{
    // FNV-1a over the label, folded into the seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(mix64(seed) ^ h);
}

unsigned resolve_threads(unsigned requested) noexcept
{
    if (requested == 0) requested = std::thread::hardware_concurrency();
    return std::max(1u, requested);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body)
{
    if (count == 0) return;
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(resolve_threads(threads), count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const auto i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

std::vector<MeanEstimate> mc_moments(
    std::uint64_t samples, unsigned threads, std::size_t dim,
    const std::function<void(std::uint64_t, std::span<double>)>& sample)
{
    if (samples == 0) throw InvalidArgument("Monte Carlo sample count must be positive");

    const std::uint64_t blocks = (samples + kBlockSize - 1) / kBlockSize;
    std::vector<BlockMoments> partial(blocks);

    parallel_for(blocks, threads, [&](std::size_t b) {
        BlockMoments& acc = partial[b];
        acc.mean.assign(dim, 0.0);
        acc.m2.assign(dim, 0.0);
        std::vector<double> value(dim);
        const std::uint64_t begin = b * kBlockSize;
        const std::uint64_t end = std::min(samples, begin + kBlockSize);
        for (std::uint64_t i = begin; i < end; ++i) {
            sample(i, value);
            ++acc.count;
            const double n = static_cast<double>(acc.count);
            for (std::size_t d = 0; d < dim; ++d) {
                const double delta = value[d] - acc.mean[d];
                acc.mean[d] += delta / n;
                acc.m2[d] += delta * (value[d] - acc.mean[d]);
            }
        }
    });

    // Chan et al. pairwise combination, always in block order.
    BlockMoments total = std::move(partial.front());
    for (std::uint64_t b = 1; b < blocks; ++b) {
        const BlockMoments& next = partial[b];
        const double na = static_cast<double>(total.count);
        const double nb = static_cast<double>(next.count);
        const double n = na + nb;
        for (std::size_t d = 0; d < dim; ++d) {
            const double delta = next.mean[d] - total.mean[d];
            total.mean[d] += delta * nb / n;
            total.m2[d] += next.m2[d] + delta * delta * na * nb / n;
        }
        total.count += next.count;
    }

    std::vector<MeanEstimate> out(dim);
    const double n = static_cast<double>(total.count);
    for (std::size_t d = 0; d < dim; ++d) {
        out[d].mean = total.mean[d];
        out[d].samples = total.count;
        out[d].std_error = total.count > 1 ? std::sqrt(total.m2[d] / (n - 1.0) / n) : 0.0;
    }
    return out;
}

MeanEstimate mc_mean(
    std::uint64_t samples, unsigned threads, const std::function<double(std::uint64_t)>& sample)
{
    return mc_moments(samples, threads, 1, [&](std::uint64_t i, std::span<double> out) {
        out[0] = sample(i);
    }).front();
}

}  // namespace lsgeom
