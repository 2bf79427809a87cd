#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace podtann {

using Scalar = double;

template <typename T> using Vec6T = Eigen::Matrix<T, 6, 1>;
template <typename T> using Mat3T = Eigen::Matrix<T, 3, 3>;
template <typename T> using Mat6T = Eigen::Matrix<T, 6, 6>;

using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Vec6 = Vec6T<Scalar>;
using Mat3 = Mat3T<Scalar>;
using Mat6 = Mat6T<Scalar>;
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Seeded generator with reproducible uniform and normal draws.
// std::normal_distribution is implementation-defined and would break
// byte-reproducible datasets across standard libraries; mt19937_64 raw
// output is pinned by the standard, so the variates are built here.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  Scalar uniform() { return static_cast<Scalar>(engine_() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, pairwise cached
  Scalar normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const Scalar u1 = 1.0 - uniform(); // (0, 1]
    const Scalar u2 = uniform();
    const Scalar mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return mag * std::cos(2.0 * M_PI * u2);
  }

  Scalar normal(Scalar mean, Scalar std_dev) { return mean + std_dev * normal(); }

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  Scalar spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace podtann
