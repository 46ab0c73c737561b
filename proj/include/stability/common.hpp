#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace stability {

// Thrown when a tape enumeration or dataset universe exceeds the configured cap.
struct EnumerationTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an algorithm reads past its declared bit budget.
struct TapeExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an oracle algorithm is queried on a distribution outside its law map.
struct UnknownDistribution : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Execution policy for the trial/audit kernels. Serial is the reference
// implementation; OpenMP must produce bit-identical results (all parallel
// aggregation is integer-valued or slot-indexed by trial).
enum class Exec { Serial, OpenMP };

inline constexpr int kDefaultEnumCap = 24;

// splitmix64 (Steele, Lea, Flood 2014). The single PRF used everywhere:
// tapes, sample streams, trial seeds. Documented so bit streams are
// reproducible within a build.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from (master, stream id).
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    uint64_t s = master ^ (0x9E3779B97F4A7C15ull * (stream + 0x632BE59BD9B4E019ull));
    uint64_t a = splitmix64(s);
    uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

// Counter-based uniform bit source; satisfies UniformRandomBitGenerator so it
// can drive std:: distributions.
class SplitMix {
public:
    using result_type = uint64_t;
    explicit SplitMix(uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<uint64_t>::max(); }

    result_type operator()() { return splitmix64(state_); }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(operator()() >> 11) * 0x1.0p-53; }

    SplitMix fork(uint64_t stream) { return SplitMix(derive_seed(operator()(), stream)); }

private:
    uint64_t state_;
};

inline int ceil_log2(uint64_t n) {
    int b = 0;
    while ((1ull << b) < n) ++b;
    return b;
}

inline uint64_t next_pow2(uint64_t n) { return n <= 1 ? 1 : 1ull << ceil_log2(n); }

}  // namespace stability
