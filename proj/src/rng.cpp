#include "riskagg/rng.hpp"

#include <cmath>

#include "riskagg/errors.hpp"
#include "riskagg/marginals.hpp"

namespace riskagg::rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mul_hilo(kPhiloxM0, c[0], lo0, hi0);
    mul_hilo(kPhiloxM1, c[2], lo1, hi1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key) {
    std::array<std::uint32_t, 4> c = counter;
    std::array<std::uint32_t, 2> k = key;
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kPhiloxW0;
            k[1] += kPhiloxW1;
        }
        philox_round(c, k);
    }
    return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
    std::uint64_t z = x + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t stream_id(Purpose purpose, int level, std::uint64_t index) {
    if (level < 0 || level > 255)
        throw std::invalid_argument("stream_id: level out of range");
    if (index >= (std::uint64_t(1) << 48))
        throw std::invalid_argument("stream_id: node index out of range");
    const std::uint64_t packed =
        (static_cast<std::uint64_t>(purpose) << 56) | (static_cast<std::uint64_t>(level) << 48) | index;
    return splitmix64(packed);
}

Stream::Stream(std::uint64_t seed, std::uint64_t sid) {
    const std::uint64_t k = splitmix64(seed ^ 0x243F6A8885A308D3ull);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    sid_ = {static_cast<std::uint32_t>(sid), static_cast<std::uint32_t>(sid >> 32)};
}

std::uint64_t Stream::bits_at(std::uint64_t index) const {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(index),
        static_cast<std::uint32_t>(index >> 32),
        sid_[0],
        sid_[1],
    };
    const auto out = philox4x32(ctr, key_);
    return static_cast<std::uint64_t>(out[0]) | (static_cast<std::uint64_t>(out[1]) << 32);
}

double Stream::u01_at(std::uint64_t index) const {
    // 53 random bits centered in (0,1); can never return 0 or 1.
    const std::uint64_t b = bits_at(index) >> 11;
    return (static_cast<double>(b) + 0.5) * 0x1.0p-53;
}

Cursor::Cursor(const Stream& s, std::uint64_t begin, std::uint64_t end)
    : s_(&s), at_(begin), end_(end) {}

double Cursor::u01() {
    if (at_ >= end_)
        throw NumericError("rng cursor exhausted its index range");
    return s_->u01_at(at_++);
}

double Cursor::normal() {
    return marginals::std_normal_quantile(u01());
}

double Cursor::exponential() {
    return -std::log(u01());
}

double Cursor::gamma(double shape) {
    if (!(shape > 0.0))
        throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
        // Boost to shape+1 and scale back (Marsaglia-Tsang, sec. 6).
        const double u = u01();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = u01();
        if (u < 1.0 - 0.0331 * x * x * x * x)
            return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v;
    }
}

} // namespace riskagg::rng
