#include "stability/bit_tape.hpp"

namespace stability {

BitTape BitTape::from_integer(uint64_t v, int len) {
    std::vector<uint8_t> bits(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i)
        bits[static_cast<size_t>(i)] = static_cast<uint8_t>((v >> (len - 1 - i)) & 1);
    return BitTape(std::move(bits));
}

uint64_t BitTape::as_integer() const {
    uint64_t v = 0;
    for (uint8_t b : bits_) v = (v << 1) | b;
    return v;
}

BitTape fresh_tape(uint64_t master_seed, uint64_t stream_id, int len) {
    uint64_t state = derive_seed(master_seed, stream_id);
    std::vector<uint8_t> bits(static_cast<size_t>(len));
    uint64_t word = 0;
    for (int i = 0; i < len; ++i) {
        if (i % 64 == 0) word = splitmix64(state);
        bits[static_cast<size_t>(i)] = static_cast<uint8_t>((word >> (i % 64)) & 1);
    }
    return BitTape(std::move(bits));
}

TapeRange::TapeRange(int len, int cap) : len_(len) {
    if (len < 0 || len > cap)
        throw EnumerationTooLarge("tape enumeration over " + std::to_string(len) +
                                  " bits exceeds cap " + std::to_string(cap));
}

}  // namespace stability
