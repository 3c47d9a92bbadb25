#include "pats/rng.hpp"

#include <cmath>
#include <numbers>

namespace pats {

namespace {
constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;
}

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept
{
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// FNV-1a, 64-bit.
std::uint64_t hash_label(std::string_view label) noexcept
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t Substream::bits(std::uint64_t counter) const noexcept
{
    return mix64(key_ + (counter + 1) * golden_gamma);
}

double Substream::uniform(std::uint64_t counter) const noexcept
{
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double box_muller(std::uint64_t a, std::uint64_t b) noexcept
{
    // u1 in (0, 1] keeps the log finite.
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Substream::normal(std::uint64_t index) const noexcept
{
    return box_muller(bits(2 * index), bits(2 * index + 1));
}

Substream RngStream::substream(std::string_view label, std::uint64_t index, Purpose purpose) const noexcept
{
    std::uint64_t key = mix64(seed_ ^ 0x5EEDBA5E5EEDBA5EULL);
    key = mix64(key ^ hash_label(label));
    key = mix64(key ^ (index * golden_gamma));
    key = mix64(key ^ static_cast<std::uint64_t>(purpose));
    return Substream(key);
}

double Draws::next_normal() noexcept
{
    const std::uint64_t a = next_bits();
    return box_muller(a, next_bits());
}

std::uint64_t Draws::next_below(std::uint64_t bound) noexcept
{
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next_bits();
    while (x >= limit) {
        x = next_bits();
    }
    return x % bound;
}

} // namespace pats
