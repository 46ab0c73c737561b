#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "stability/common.hpp"
#include "stability/finite_distribution.hpp"

namespace stability {

// An i.i.d. sample of elements of the data domain. Two representations share
// one interface:
//
//   - stream: (distribution, seed, n). Elements materialize on demand as
//     quantile(dist, u(seed, i)). This is what sample() returns; it keeps
//     huge composed samples (transforms run their input on many blocks)
//     cheap while staying a pure function of the seed.
//   - explicit: a concrete element vector, used by the DP auditor and the
//     enumeration tests where the input dataset itself is enumerated.
//
// block(i, len) extracts the i-th disjoint i.i.d. sub-sample; entropy_seed()
// is the sample-attributed randomness root used by oracle algorithms (the
// paper's convention that a deterministic algorithm draws all randomness from
// its sample).
class Sample {
public:
    static Sample stream(std::shared_ptr<const FiniteDistribution> dist, uint64_t seed, int64_t n) {
        Sample s;
        s.dist_ = std::move(dist);
        s.seed_ = seed;
        s.n_ = n;
        return s;
    }

    static Sample explicit_elems(std::vector<int> elems, uint64_t dist_fingerprint = 0) {
        Sample s;
        s.elems_ = std::make_shared<const std::vector<int>>(std::move(elems));
        s.n_ = static_cast<int64_t>(s.elems_->size());
        s.dist_fp_ = dist_fingerprint;
        return s;
    }

    int64_t size() const { return n_; }
    bool is_stream() const { return dist_ != nullptr; }

    int at(int64_t i) const {
        if (elems_) return (*elems_)[static_cast<size_t>(offset_ + i)];
        uint64_t s = derive_seed(seed_, static_cast<uint64_t>(i) + 1);
        SplitMix rng(s);
        return dist_->quantile(rng.unit());
    }

    std::vector<int> materialize() const {
        std::vector<int> out(static_cast<size_t>(n_));
        for (int64_t i = 0; i < n_; ++i) out[static_cast<size_t>(i)] = at(i);
        return out;
    }

    // Sub-sample of length len starting at offset. For streams this is a
    // fresh derived stream keyed by the offset (equal in distribution and
    // independent across disjoint offsets); for explicit samples it is the
    // literal subrange.
    Sample sub(int64_t offset, int64_t len) const {
        if (elems_) {
            Sample s = *this;
            s.offset_ = offset_ + offset;
            s.n_ = len;
            if (offset_ + offset + len > static_cast<int64_t>(elems_->size()))
                throw std::out_of_range("Sample::sub past end of explicit sample");
            return s;
        }
        return stream(dist_, derive_seed(seed_, 0xB10C0000ull + static_cast<uint64_t>(offset)), len);
    }

    // i-th disjoint block of length len.
    Sample block(int64_t i, int64_t len) const { return sub(i * len, len); }

    uint64_t dist_fingerprint() const { return dist_ ? dist_->fingerprint() : dist_fp_; }
    const FiniteDistribution* dist() const { return dist_.get(); }

    // Randomness root attributed to the sample. Streams hand back a seed
    // derivation (exactly uniform by construction); explicit samples hash
    // their contents.
    uint64_t entropy_seed() const {
        if (dist_) return derive_seed(seed_, 0x0E17A0Full);
        uint64_t h = 0x8AD1u ^ static_cast<uint64_t>(n_);
        for (int64_t i = 0; i < n_; ++i) {
            h ^= static_cast<uint64_t>(at(i)) + 0x9E3779B97F4A7C15ull;
            splitmix64(h);
        }
        return h;
    }

private:
    Sample() = default;

    std::shared_ptr<const FiniteDistribution> dist_;
    uint64_t seed_ = 0;
    std::shared_ptr<const std::vector<int>> elems_;
    int64_t offset_ = 0;
    int64_t n_ = 0;
    uint64_t dist_fp_ = 0;
};

// n i.i.d. draws from dist, reproducible given the seed. External randomness:
// consumes no algorithm budget.
inline Sample sample(std::shared_ptr<const FiniteDistribution> dist, int64_t n, uint64_t seed) {
    if (n < 0) throw std::invalid_argument("sample: n must be >= 0");
    return Sample::stream(std::move(dist), seed, n);
}

// Probability integral transform of an explicit sample under dist: the
// lexicographic-CDF corner of the sample's cell in [0, 1). Used by the
// enumeration test that certifies oracle laws: the induced output law matches
// the declared law up to |Y| * (largest sample atom).
double sample_pit(const Sample& s, const FiniteDistribution& dist);

}  // namespace stability
