#pragma once

#include <cstdint>
#include <string_view>

namespace pats {

/// What a random substream is used for. Part of the substream key, so two
/// purposes never share draws even for the same (label, index).
enum class Purpose : std::uint64_t {
    init = 1,
    data = 2,
    shuffle = 3,
    subset = 4,
    gauss = 5,
    bernoulli = 6,
    noisytune = 7,
};

/// Stateless counter-based stream: draw i is a pure function of (key, i).
class Substream {
public:
    explicit Substream(std::uint64_t key) : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t bits(std::uint64_t counter) const noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform(std::uint64_t counter) const noexcept;
    /// Standard normal via Box-Muller on counters 2i and 2i+1.
    double normal(std::uint64_t index) const noexcept;

private:
    std::uint64_t key_;
};

/// Root of all randomness in a run. Substreams are keyed by (label, index, purpose),
/// so the values a consumer sees never depend on what other consumers drew or
/// in which order.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    Substream substream(std::string_view label, std::uint64_t index, Purpose purpose) const noexcept;

private:
    std::uint64_t seed_;
};

/// Sequential cursor over a Substream, for consumers that draw a variable number of values.
class Draws {
public:
    explicit Draws(Substream stream) : stream_(stream) {}

    std::uint64_t next_bits() noexcept { return stream_.bits(counter_++); }
    double next_uniform() noexcept { return stream_.uniform(counter_++); }
    double next_normal() noexcept;
    /// Uniform integer in [0, bound); bound must be positive.
    std::uint64_t next_below(std::uint64_t bound) noexcept;

private:
    Substream stream_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
/// Standard normal from two raw 64-bit draws.
double box_muller(std::uint64_t a, std::uint64_t b) noexcept;
std::uint64_t hash_label(std::string_view label) noexcept;

} // namespace pats
