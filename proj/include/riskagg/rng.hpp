#pragma once

#include <array>
#include <cstdint>

namespace riskagg::rng {

// Philox4x32-10 block cipher (Salmon et al., SC 2011): 128-bit counter,
// 64-bit key, 128-bit output. Pure function of its inputs, which is what
// makes parallel and serial simulation runs agree bit for bit.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

// Finalizer-style 64-bit mixer (bijective).
std::uint64_t splitmix64(std::uint64_t x);

// Draw contexts. A tree node may own several independent streams, one per
// purpose, so e.g. leaf draws never collide with copula draws.
enum class Purpose : std::uint64_t {
    LeafDraw = 1,
    Copula = 2,
    JointSample = 3,
};

// Stream id for (purpose, level, node index). Injective before mixing, so
// distinct nodes can never share a stream.
std::uint64_t stream_id(Purpose purpose, int level, std::uint64_t index);

// Random-access stream: the value at index i is a pure function of
// (seed, sid, i). The stream id selects the upper counter words, the index
// the lower ones; the master seed is the cipher key.
class Stream {
public:
    Stream() = default;
    Stream(std::uint64_t seed, std::uint64_t sid);

    std::uint64_t bits_at(std::uint64_t index) const;
    // Uniform draw strictly inside (0, 1).
    double u01_at(std::uint64_t index) const;

private:
    std::array<std::uint32_t, 2> key_{0, 0};
    std::array<std::uint32_t, 2> sid_{0, 0};
};

// Sequential cursor over a half-open index range of a stream, for samplers
// that consume a variable number of uniforms (rejection loops). Throws
// NumericError if the range is exhausted, which at the strides used here
// has vanishing probability.
class Cursor {
public:
    Cursor(const Stream& s, std::uint64_t begin, std::uint64_t end);

    double u01();
    double normal();        // standard normal via inverse CDF
    double exponential();   // Exp(1)
    double gamma(double shape);  // Gamma(shape, 1), Marsaglia-Tsang

private:
    const Stream* s_;
    std::uint64_t at_;
    std::uint64_t end_;
};

} // namespace riskagg::rng
