#ifndef PILOTWAVE_RNG_HPP
#define PILOTWAVE_RNG_HPP

#include <cstdint>
#include <random>

namespace pilotwave {

/// SplitMix64 step (Steele/Lea/Flood mixing constants). Used only to derive
/// well-separated substream seeds from (master seed, stream index).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += UINT64_C(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
    return z ^ (z >> 31);
}

/// Seed for the index-th substream of a master seed. Each sample, trajectory
/// or detection event consumes its own substream, so results do not depend on
/// execution order or worker count.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ index;
    std::uint64_t b = splitmix64(s);
    return b;
}

/// One independent random substream.
class Substream {
public:
    explicit Substream(std::uint64_t seed) : engine_(seed) {}
    Substream(std::uint64_t master, std::uint64_t index) : engine_(substream_seed(master, index)) {}

    double uniform() { return uniform_(engine_); }
    double normal(double mean, double stddev) {
        return mean + stddev * normal_(engine_);
    }
    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace pilotwave

#endif
