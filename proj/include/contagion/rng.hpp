#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace contagion {

// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
// A draw is a pure function of (key, counter), so streams can be carved up
// by (seed, path, purpose) and consumed from any thread in any order while
// producing identical values.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        constexpr std::uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
        constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
            const std::array<std::uint32_t, 4> next = {
                std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
                std::uint32_t(p1),
                std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
                std::uint32_t(p0),
            };
            ctr = next;
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }
};

// Purpose ids keep draw categories on disjoint substreams: changing the mark
// law of a simulation must not perturb its event skeleton, and Gaussian
// increments must not shift when the event count changes.
enum class Stream : std::uint32_t {
    thinning = 1,     // candidate exponentials + accept/reject uniforms
    class_select = 2, // which class fires at an accepted event
    marks = 3,        // jump sizes z ~ nu_l
    gauss = 4,        // Brownian increments
    aux = 5,
};

// One substream: an endless sequence of uniforms keyed by (seed, path, purpose).
class Substream {
public:
    Substream(std::uint64_t seed, std::uint64_t path, Stream purpose)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32) ^ std::uint32_t(path >> 32)},
          base_{0u, 0u, static_cast<std::uint32_t>(purpose), std::uint32_t(path)} {}

    // Uniform on the open interval (0,1).
    double uniform() {
        if (have_spare_u_) {
            have_spare_u_ = false;
            return spare_u_;
        }
        auto ctr = base_;
        ctr[0] = std::uint32_t(index_);
        ctr[1] = std::uint32_t(index_ >> 32);
        ++index_;
        const auto r = Philox4x32::block(ctr, key_);
        spare_u_ = to_unit(r[2], r[3]);
        have_spare_u_ = true;
        return to_unit(r[0], r[1]);
    }

    // Standard exponential.
    double exponential() { return -std::log(uniform()); }

    // Standard normal via Box-Muller; the paired value is cached.
    double gauss() {
        if (have_spare_g_) {
            have_spare_g_ = false;
            return spare_g_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * 3.14159265358979323846 * u2;
        spare_g_ = rad * std::sin(ang);
        have_spare_g_ = true;
        return rad * std::cos(ang);
    }

private:
    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (std::uint64_t(hi) << 32) | lo;
        return (double(bits >> 11) + 0.5) * 0x1.0p-53; // strictly inside (0,1)
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> base_;
    std::uint64_t index_ = 0;
    double spare_u_ = 0.0;
    double spare_g_ = 0.0;
    bool have_spare_u_ = false;
    bool have_spare_g_ = false;
};

// The bundle of substreams one simulated path draws from.
struct PathRng {
    PathRng(std::uint64_t seed, std::uint64_t path)
        : thinning(seed, path, Stream::thinning),
          class_select(seed, path, Stream::class_select),
          marks(seed, path, Stream::marks),
          gauss(seed, path, Stream::gauss) {}

    Substream thinning;
    Substream class_select;
    Substream marks;
    Substream gauss;
};

} // namespace contagion
