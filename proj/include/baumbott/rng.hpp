#ifndef BAUMBOTT_RNG_HPP
#define BAUMBOTT_RNG_HPP

#include <cstdint>
#include <random>

#include "baumbott/foliation.hpp"
#include "baumbott/numkernel.hpp"

namespace baumbott {

/// Deterministic random source. mt19937_64 output is bit-exact across
/// platforms; the distributions below are hand-rolled (std::uniform_* and
/// std::normal_distribution are not portable) so seeded runs reproduce
/// everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}

    std::uint64_t raw() { return g_(); }

    /// Uniform in [0, 1): top 53 bits of one raw draw.
    double uniform() { return static_cast<double>(g_() >> 11) * 0x1p-53; }

    /// Standard complex normal, E|z|^2 = 1. One Box-Muller pair per call
    /// (two raw draws), no caching.
    cplx complex_normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double th = 2.0 * std::numbers::pi * u2;
        return cplx(r * std::cos(th), r * std::sin(th)) / std::numbers::sqrt2;
    }

    /// Real standard normal; consumes a full Box-Muller pair (the sine half
    /// is discarded to keep the draw count per call fixed).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::mt19937_64 g_;
};

/// Degree-n field with i.i.d. standard-complex-normal coefficients, drawn in
/// the monomial order, P before Q. Fully determined by (seed, degree).
inline VectorField random_field(std::uint64_t seed, int degree) {
    Rng rng(seed);
    const size_t len = BiPoly::size_for(degree);
    std::vector<cplx> pc(len), qc(len);
    for (auto& a : pc) a = rng.complex_normal();
    for (auto& a : qc) a = rng.complex_normal();
    return VectorField(BiPoly(degree, std::move(pc)), BiPoly(degree, std::move(qc)));
}

}  // namespace baumbott

#endif  // BAUMBOTT_RNG_HPP
