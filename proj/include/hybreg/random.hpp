#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>
#include <Eigen/QR>

#include "hybreg/errors.hpp"

namespace hybreg {

/// Seeded generator used everywhere randomness enters the library.
///
/// Streams are defined as: std::mt19937_64 seeded with the 64-bit seed,
/// uniforms built from the top 53 bits of each draw, normals from the
/// Box-Muller transform (cosine branch first, sine branch cached). Both
/// pieces are fully specified, so a seed reproduces the same bits on every
/// conforming platform, unlike std::normal_distribution.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

  Eigen::VectorXd normal_vector(Index n) {
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  /// Filled column by column.
  Eigen::MatrixXd normal_matrix(Index rows, Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  /// n x k block with orthonormal columns (Householder QR of a Gaussian block).
  Eigen::MatrixXd orthonormal_block(Index n, Index k) {
    detail::require(k <= n, "orthonormal_block: k must not exceed n");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(normal_matrix(n, k));
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hybreg
