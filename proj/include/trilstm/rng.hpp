#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace trilstm {

// Counter-based random stream: draw i is a hash of (key, i), so identical
// seeds give identical sequences and child streams derived from the key
// alone are independent of how many draws the parent has made.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t next_u64();
    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double sd);
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    RngStream child(std::string_view label) const;
    RngStream child(std::uint64_t index) const;

    std::vector<std::size_t> permutation(std::size_t n);
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

    std::uint64_t key() const { return key_; }

private:
    RngStream(std::uint64_t key, int) : key_(key) {}

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace trilstm
