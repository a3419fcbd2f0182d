#pragma once

#include "simplab/grammar.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace simplab {

// Seeded random stream. Uses mt19937_64 with an explicit 53-bit mantissa
// conversion so sequences are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    // Index drawn from a probability vector (need not be exactly normalized).
    std::size_t categorical(std::span<const double> probs);

    // Seed of substream `index` of `master` (splitmix64 mixing).
    static std::uint64_t derive(std::uint64_t master, std::uint64_t index);

private:
    std::mt19937_64 engine_;
};

struct GeneratedSequence {
    TokenSequence tokens;
    // Set when generation stopped on the token budget with a sentence open,
    // and for a zero budget.
    bool truncated = false;
};

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

// Samples sentences from `g` until `max_tokens` tokens (END included) or
// `max_sentences` sentences have been produced. Deterministic given seed.
GeneratedSequence generate(const Grammar& g, std::uint64_t seed, std::size_t max_tokens,
                           std::size_t max_sentences = kUnlimited);

} // namespace simplab
