#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "embedhalluc/random.hpp"

namespace embedhalluc::data {

// Endless sequence of indices in [0, n): a fresh shuffle per pass, so every
// index appears once per pass. Batches may straddle passes.
class ShuffledStream {
public:
    ShuffledStream(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) { reshuffle(); }

    std::vector<std::size_t> next(std::size_t count) {
        std::vector<std::size_t> out;
        out.reserve(count);
        while (out.size() < count && !order_.empty()) {
            if (pos_ == order_.size()) reshuffle();
            out.push_back(order_[pos_++]);
        }
        return out;
    }

private:
    void reshuffle() {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }

    std::vector<std::size_t> order_;
    Rng rng_;
    std::size_t pos_ = 0;
};

}  // namespace embedhalluc::data
