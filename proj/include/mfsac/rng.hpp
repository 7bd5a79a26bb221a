#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

namespace mfsac {

// Counter-based random streams. Every draw is a pure function of
// (seed, agent, purpose, counter), so parallel execution and replay
// produce identical numbers without storing any noise record.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

}  // namespace detail

enum class RngPurpose : std::uint64_t {
    Plant = 1,       // Wiener increments driving the state SDE
    Dither = 2,      // excitation Wiener process
    Init = 3,        // initial conditions
    ThetaDraw = 4,   // population parameter sampling
    Graph = 5,       // observation graph sampling
    Test = 6,
};

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t agent, RngPurpose purpose)
        : key_(detail::mix3(seed, agent, static_cast<std::uint64_t>(purpose))) {}

    // Uniform on (0,1), never exactly 0 or 1.
    double uniform() {
        const std::uint64_t z = detail::splitmix64(key_ ^ detail::splitmix64(ctr_++));
        return (static_cast<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * M_PI * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

    Eigen::VectorXd normal_vec(int dim) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v(i) = normal();
        return v;
    }

    // Integer in [0, bound) by rejection-free scaling (bias negligible for desk-scale bounds).
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t z = detail::splitmix64(key_ ^ detail::splitmix64(ctr_++));
        return z % bound;
    }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mfsac
