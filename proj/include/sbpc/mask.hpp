#ifndef SBPC_MASK_HPP
#define SBPC_MASK_HPP

#include <bit>
#include <cstdint>

namespace sbpc {

// Customer-set bitmask covering ids 0..127 (node 0 unused in practice).
struct Mask128 {
    std::uint64_t w0 = 0, w1 = 0;

    void set(int i) {
        if (i < 64)
            w0 |= std::uint64_t(1) << i;
        else
            w1 |= std::uint64_t(1) << (i - 64);
    }
    bool test(int i) const {
        return i < 64 ? (w0 >> i) & 1 : (w1 >> (i - 64)) & 1;
    }
    int count() const { return std::popcount(w0) + std::popcount(w1); }
    int count_and(const Mask128& o) const {
        return std::popcount(w0 & o.w0) + std::popcount(w1 & o.w1);
    }
    bool intersects(const Mask128& o) const {
        return (w0 & o.w0) | (w1 & o.w1);
    }
    friend bool operator==(const Mask128&, const Mask128&) = default;
};

}  // namespace sbpc

#endif
