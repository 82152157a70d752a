#include "fognet/rng.hpp"

namespace fognet {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view stream,
                          std::initializer_list<std::uint64_t> indices) {
    std::uint64_t h = mix64(base ^ fnv1a(stream));
    for (const std::uint64_t idx : indices) {
        h = mix64(h ^ (idx + 0x9E3779B97F4A7C15ull));
    }
    return h;
}

} // namespace fognet
