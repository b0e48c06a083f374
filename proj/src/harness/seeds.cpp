#include <atomic>
#include <exception>
#include <fmt/format.h>
#include <thread>
#include <unordered_map>

#include "bklab/errors.hpp"
#include "bklab/harness.hpp"
#include "bklab/rng.hpp"

namespace bklab {

std::size_t resolve_threads(std::size_t threads) {
    if (threads > 0) return threads;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<std::uint64_t> enumerate_seeds(std::uint64_t master, std::span<const std::size_t> n_grid,
                                           std::size_t replicates) {
    std::vector<std::uint64_t> seeds;
    seeds.reserve(n_grid.size() * replicates);
    std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t n : n_grid) {
        for (std::size_t r = 0; r < replicates; ++r) {
            const auto s = derive_seed(master, n, r);
            auto [it, fresh] = seen.emplace(s, std::make_pair(n, r));
            if (!fresh) {
                throw ConfigError(fmt::format("derived seed collision between (n={}, r={}) and (n={}, r={})",
                                              it->second.first, it->second.second, n, r));
            }
            seeds.push_back(s);
        }
    }
    return seeds;
}

}  // namespace bklab
