#ifndef MOBCOUNT_RNG_HPP
#define MOBCOUNT_RNG_HPP

#include <cstdint>
#include <initializer_list>

namespace mobcount {

// 64-bit finalizer used both as the splitmix64 output function and for
// deriving child seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and a path of
// indices (replicate, day, trip, ...).  Changing a later path element never
// perturbs streams derived with a shorter path prefix.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p ^ 0xd1b54a32d192ed03ULL));
  return h;
}

// Small counter-based generator (splitmix64).  All sampling in the project
// goes through this class so results are bit-identical across platforms and
// thread counts.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1), endpoints excluded so inverse-CDF transforms are safe.
  double uniform() {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    if (u <= 0.0) u = 0x1.0p-53;
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via the inverse CDF.
  double normal();

  // Exact Poisson sampling; inversion for small means, transformed
  // rejection (PTRS) for large ones.
  long long poisson(double mean);

 private:
  std::uint64_t state_;
};

// Inverse standard normal CDF, accurate to ~1e-15 after a Halley refinement.
double inv_norm_cdf(double p);

}  // namespace mobcount

#endif
