#include "trilstm/rng.hpp"

#include <cmath>
#include <numbers>

namespace trilstm {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed ^ kGolden)) {}

std::uint64_t RngStream::next_u64() {
    return mix64(key_ + ++counter_ * kGolden);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::normal(double mean, double sd) {
    return mean + sd * normal();
}

std::uint64_t RngStream::below(std::uint64_t n) {
    // modulo bias is ~n/2^64, irrelevant at the sizes used here
    return n ? next_u64() % n : 0;
}

RngStream RngStream::child(std::string_view label) const {
    return RngStream(mix64(key_ ^ mix64(fnv1a64(label) + kGolden)), 0);
}

RngStream RngStream::child(std::uint64_t index) const {
    return RngStream(mix64(key_ ^ mix64((index + 1) * kGolden)), 0);
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = i;
    shuffle(p);
    return p;
}

} // namespace trilstm
