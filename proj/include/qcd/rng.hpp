#pragma once
#include <cstdint>
#include <random>
#include <string_view>

namespace qcd {

// A (base, stream) pair fully determines a sample stream. Replications and
// experiment cells derive their own streams from a parent seed, so results
// do not depend on thread count or evaluation order.
struct Seed {
    std::uint64_t base = 0;
    std::uint64_t stream = 0;

    bool operator==(const Seed&) const = default;
};

inline std::uint64_t mix64(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a child seed from a label. Used to key experiment cells by what
// they simulate, so identical sub-experiments get identical streams.
inline Seed derive(const Seed& s, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return Seed{mix64(s.base ^ mix64(h)), mix64(s.stream ^ h)};
}

inline Seed with_stream(const Seed& s, std::uint64_t index) {
    return Seed{s.base, mix64(s.stream ^ mix64(index))};
}

class Rng {
public:
    explicit Rng(const Seed& s) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(s.base), static_cast<std::uint32_t>(s.base >> 32),
            static_cast<std::uint32_t>(s.stream), static_cast<std::uint32_t>(s.stream >> 32)};
        gen_.seed(seq);
    }

    std::uint64_t next_u64() { return gen_(); }

    // 53-bit uniform in [0,1)
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // uniform in (0,1), safe to feed through inverse CDFs
    double uniform_open() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace qcd
