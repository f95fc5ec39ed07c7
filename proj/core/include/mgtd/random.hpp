#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mgtd::rng {

// All sampling in the toolkit flows through this wrapper. The generator is
// std::mt19937_64, whose algorithm is pinned by the C++ standard, and bounded
// draws use explicit rejection sampling because the standard library
// distributions are not bit-portable across implementations.
class Prng {
public:
    explicit Prng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Unbiased integer in [0, n). n must be >= 1.
    std::uint64_t below(std::uint64_t n);

    // Float in [0, 1) with 53 random bits.
    double unit();

private:
    std::mt19937_64 gen_;
};

// splitmix64 finalizer, used to derive stage/group seeds from a base seed.
std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a over the label bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// Derived seed for a named sub-task: splitmix64(base ^ fnv1a64(label)).
// Independent of the order sub-tasks are visited in.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, Prng& prng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(prng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

// k distinct indices drawn from [0, n), returned in ascending order so that
// callers keeping the survivors preserve input order. k must be <= n.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Prng& prng);

}  // namespace mgtd::rng
