#pragma once

#include <cstdint>
#include <vector>

#include "stability/common.hpp"

namespace stability {

// Counted, replayable source of shared random bits. The budget is the
// resource being measured: reads past it throw TapeExhausted. A tape replayed
// from the same contents yields the same read sequence. Single consumer; copy
// the tape to share contents across runs.
class BitTape {
public:
    BitTape() = default;
    explicit BitTape(std::vector<uint8_t> bits) : bits_(std::move(bits)) {}

    // MSB-first encoding of v in len bits, so lexicographic tape order equals
    // numeric order under enumeration.
    static BitTape from_integer(uint64_t v, int len);

    int budget() const { return static_cast<int>(bits_.size()); }
    int cursor() const { return cursor_; }

    int read_bit() {
        if (cursor_ >= budget()) throw TapeExhausted("bit budget exhausted at " + std::to_string(budget()) + " bits");
        return bits_[static_cast<size_t>(cursor_++)];
    }

    // k single-bit reads, assembled MSB-first.
    uint64_t read_bits(int k) {
        uint64_t v = 0;
        for (int i = 0; i < k; ++i) v = (v << 1) | static_cast<uint64_t>(read_bit());
        return v;
    }

    void rewind() { cursor_ = 0; }

    const std::vector<uint8_t>& bits() const { return bits_; }
    uint64_t as_integer() const;

private:
    std::vector<uint8_t> bits_;
    int cursor_ = 0;
};

// len bits of the documented PRF keyed by (master_seed, stream_id). Identical
// inputs give identical tapes within a build.
BitTape fresh_tape(uint64_t master_seed, uint64_t stream_id, int len);

// Calls fn(tape) for each of the 2^len tapes in lexicographic order.
// Throws EnumerationTooLarge when len exceeds the cap.
template <typename F>
void for_each_tape(int len, F&& fn, int cap = kDefaultEnumCap) {
    if (len < 0 || len > cap)
        throw EnumerationTooLarge("tape enumeration over " + std::to_string(len) +
                                  " bits exceeds cap " + std::to_string(cap));
    for (uint64_t v = 0; v < (1ull << len); ++v) {
        BitTape t = BitTape::from_integer(v, len);
        fn(t);
    }
}

// Collapsed enumeration: runs fn once per distinct read-prefix and reports the
// number of full tapes sharing it. Equivalent to for_each_tape with the weight
// accumulated, but skips unread suffixes, which matters when eval's reads vary
// per tape. fn(tape) must return after consuming the bits it needs.
template <typename F>
void for_each_tape_collapsed(int len, F&& fn, int cap = kDefaultEnumCap) {
    if (len < 0 || len > cap)
        throw EnumerationTooLarge("tape enumeration over " + std::to_string(len) +
                                  " bits exceeds cap " + std::to_string(cap));
    uint64_t v = 0;
    const uint64_t total = 1ull << len;
    while (v < total) {
        BitTape t = BitTape::from_integer(v, len);
        int read = fn(t);
        if (read < 0 || read > len) read = len;
        uint64_t weight = 1ull << (len - read);
        // Prefixes are aligned: v is a multiple of the subtree size.
        v += weight;
    }
}

// Iterator-style access for callers that want a range of all 2^len tapes.
class TapeRange {
public:
    explicit TapeRange(int len, int cap = kDefaultEnumCap);

    class iterator {
    public:
        iterator(uint64_t v, int len) : v_(v), len_(len) {}
        BitTape operator*() const { return BitTape::from_integer(v_, len_); }
        iterator& operator++() { ++v_; return *this; }
        bool operator!=(const iterator& o) const { return v_ != o.v_; }

    private:
        uint64_t v_;
        int len_;
    };

    iterator begin() const { return iterator(0, len_); }
    iterator end() const { return iterator(1ull << len_, len_); }
    uint64_t count() const { return 1ull << len_; }

private:
    int len_;
};

}  // namespace stability
