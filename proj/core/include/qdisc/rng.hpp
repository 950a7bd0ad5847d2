#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace qdisc {

// Deterministic splitmix64 generator. Used instead of std::mt19937 +
// std::normal_distribution so that seeded runs produce identical streams on
// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Derive an independent stream (for per-restart determinism regardless of
  // scheduling order).
  Rng fork(std::uint64_t salt) {
    return Rng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ULL));
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Complex standard Gaussian matrix.
Eigen::MatrixXcd random_gaussian(int rows, int cols, Rng& rng);

// Haar-random unitary via QR of a Gaussian matrix with phase fixing.
Eigen::MatrixXcd random_unitary(int d, Rng& rng);

// Haar-random pure state projector.
Eigen::MatrixXcd random_pure_state(int d, Rng& rng);

// Random full-rank positive definite matrix G G^dag (unnormalized).
Eigen::MatrixXcd random_psd(int d, Rng& rng);

}  // namespace qdisc
