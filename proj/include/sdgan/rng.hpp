#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace sdgan {

// xoshiro256++ seeded through splitmix64; bit-stable across platforms
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform01();  // [0,1)
    double uniform(double lo, double hi);
    double normal(double mean, double stddev);
    std::uint64_t next_below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::array<std::uint64_t, 4> state() const { return s_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

private:
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace sdgan
