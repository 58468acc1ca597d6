#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "hybreg/errors.hpp"
#include "hybreg/operators.hpp"
#include "hybreg/random.hpp"

// Test problems: discretized first-kind integral equations (shaw, baart,
// deriv2, heat), a separable 2-D Gaussian blur, the regularization matrices,
// and noise injection.

namespace hybreg {

/// Generator output: the operator, the exact solution and b_true = A x_true.
template <class Op>
struct Discretization {
  Op A;
  Vector x_true;
  Vector b_true;
};

namespace detail {

inline void require_problem_size(const char* name, Index n, bool even) {
  require(n >= 8, std::string(name) + ": n must be at least 8, got " + std::to_string(n));
  if (even) require(n % 2 == 0, std::string(name) + ": n must be even, got " + std::to_string(n));
}

template <class Op>
Discretization<Op> consistent(Op a, Vector x_true) {
  Vector b_true = a.apply(x_true);
  return Discretization<Op>{std::move(a), std::move(x_true), std::move(b_true)};
}

}  // namespace detail

/// Midpoint quadrature on [-pi/2, pi/2]^2 of
/// k(s,t) = (cos s + cos t)^2 (sin u / u)^2, u = pi (sin s + sin t).
inline Discretization<DenseOperator> gen_shaw(Index n) {
  detail::require_problem_size("gen_shaw", n, true);
  const double h = std::numbers::pi / static_cast<double>(n);
  Vector s(n);
  for (Index i = 0; i < n; ++i) s[i] = -std::numbers::pi / 2 + (static_cast<double>(i) + 0.5) * h;

  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double u = std::numbers::pi * (std::sin(s[i]) + std::sin(s[j]));
      const double sinc = u == 0.0 ? 1.0 : std::sin(u) / u;
      const double amp = (std::cos(s[i]) + std::cos(s[j])) * sinc;
      a(i, j) = a(j, i) = h * amp * amp;
    }
  }
  Vector x(n);
  for (Index i = 0; i < n; ++i)
    x[i] = 2.0 * std::exp(-6.0 * (s[i] - 0.8) * (s[i] - 0.8)) +
           std::exp(-2.0 * (s[i] + 0.5) * (s[i] + 0.5));
  return detail::consistent(DenseOperator(std::move(a)), std::move(x));
}

/// Galerkin discretization of k(s,t) = exp(s cos t), s in [0, pi/2],
/// t in [0, pi], with piecewise-constant orthonormal bases: the s-integral is
/// exact and the t-integral uses Simpson's rule per cell. x_true = sin t at
/// the cell midpoints.
inline Discretization<DenseOperator> gen_baart(Index n) {
  detail::require_problem_size("gen_baart", n, true);
  const double hs = std::numbers::pi / (2.0 * static_cast<double>(n));
  const double ht = std::numbers::pi / static_cast<double>(n);
  const double scale = std::sqrt(ht / hs) / 6.0;

  // integral of exp(s c) over [i hs, (i+1) hs]
  auto cell = [hs](Index i, double c) {
    const double lo = static_cast<double>(i) * hs;
    return c == 0.0 ? hs : std::exp(lo * c) * std::expm1(hs * c) / c;
  };

  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    const double c_lo = std::cos(static_cast<double>(j) * ht);
    const double c_mid = std::cos((static_cast<double>(j) + 0.5) * ht);
    const double c_hi = std::cos(static_cast<double>(j + 1) * ht);
    for (Index i = 0; i < n; ++i)
      a(i, j) = scale * (cell(i, c_lo) + 4.0 * cell(i, c_mid) + cell(i, c_hi));
  }
  Vector x(n);
  for (Index j = 0; j < n; ++j) x[j] = std::sin((static_cast<double>(j) + 0.5) * ht);
  return detail::consistent(DenseOperator(std::move(a)), std::move(x));
}

/// Galerkin discretization of the Green's function of -u'' on [0,1],
/// k(s,t) = s(t-1) for s < t and t(s-1) otherwise. x_true(t) = t at the
/// cell midpoints.
inline Discretization<DenseOperator> gen_deriv2(Index n) {
  detail::require_problem_size("gen_deriv2", n, false);
  const double h = 1.0 / static_cast<double>(n);
  const double h2 = h * h;
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    const double ii = static_cast<double>(i + 1);
    a(i, i) = h2 * ((ii * ii - ii + 0.25) * h - (ii - 2.0 / 3.0));
    for (Index j = 0; j < i; ++j) {
      const double jj = static_cast<double>(j + 1);
      a(i, j) = a(j, i) = h2 * (jj - 0.5) * ((ii - 0.5) * h - 1.0);
    }
  }
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = (static_cast<double>(i) + 0.5) * h;
  return detail::consistent(DenseOperator(std::move(a)), std::move(x));
}

/// Inverse heat equation: midpoint rule for the Volterra kernel
/// k(t) = t^{-3/2} / (2 kappa sqrt(pi)) exp(-1 / (4 kappa^2 t)) on [0,1]
/// (lower-triangular Toeplitz), with the standard piecewise smooth pulse
/// supported on the first half of the interval.
inline Discretization<DenseOperator> gen_heat(Index n, double kappa = 1.0) {
  detail::require_problem_size("gen_heat", n, true);
  detail::require(kappa > 0.0, "gen_heat: kappa must be positive");
  const double h = 1.0 / static_cast<double>(n);
  const double c = h / (2.0 * kappa * std::sqrt(std::numbers::pi));
  const double d = 1.0 / (4.0 * kappa * kappa);
  Vector kernel(n);
  for (Index i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * h;
    kernel[i] = c * std::pow(t, -1.5) * std::exp(-d / t);
  }
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) a(i, j) = kernel[i - j];

  Vector x = Vector::Zero(n);
  for (Index i = 0; i < n / 2; ++i) {
    const double ti = static_cast<double>(i + 1) * 20.0 / static_cast<double>(n);
    if (ti < 2.0)
      x[i] = 0.75 * ti * ti / 4.0;
    else if (ti < 3.0)
      x[i] = 0.75 + (ti - 2.0) * (3.0 - ti);
    else
      x[i] = 0.75 * std::exp(-(ti - 3.0) * 2.0);
  }
  return detail::consistent(DenseOperator(std::move(a)), std::move(x));
}

/// Row-normalized sampled Gaussian, zero boundary; sigma == 0 is the identity.
inline Matrix gaussian_blur_factor(Index n, double sigma) {
  detail::require(sigma >= 0.0, "gaussian_blur_factor: sigma must be non-negative");
  if (sigma == 0.0) return Matrix::Identity(n, n);
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double dist = static_cast<double>(i - j);
      g(i, j) = std::exp(-dist * dist / (2.0 * sigma * sigma));
    }
  for (Index i = 0; i < n; ++i) g.row(i) /= g.row(i).sum();
  return g;
}

/// Piecewise-constant N x N test image, column-major vec.
inline Vector blocky_image(Index side) {
  Matrix img = Matrix::Zero(side, side);
  const Index q = side / 4;
  const Index e = side / 8;
  img.block(q, q, side / 2 - q, 3 * q - q).setConstant(1.0);
  img.block(side / 2 + e, e, 7 * e - (side / 2 + e), side / 2 - e).setConstant(0.5);
  img.block(side / 2 + e, side / 2 + e, 2 * e, 2 * e).setConstant(0.8);
  return Eigen::Map<const Vector>(img.data(), side * side);
}

inline Discretization<KroneckerBlurOperator> gen_blur2d(Index side, double psf_sigma) {
  detail::require(side >= 8, "gen_blur2d: N must be at least 8, got " + std::to_string(side));
  const Matrix factor = gaussian_blur_factor(side, psf_sigma);
  return detail::consistent(KroneckerBlurOperator(DenseOperator(factor), DenseOperator(factor)),
                            blocky_image(side));
}

//-----------------------------------------------------------------------------

enum class RegularizerKind { identity, first_diff_1d, first_diff_2d };

inline const char* to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::identity: return "identity";
    case RegularizerKind::first_diff_1d: return "first_diff_1d";
    case RegularizerKind::first_diff_2d: return "first_diff_2d";
  }
  return "unknown";
}

inline RegularizerKind regularizer_from_string(const std::string& name) {
  if (name == "identity" || name == "I") return RegularizerKind::identity;
  if (name == "first_diff_1d" || name == "L1") return RegularizerKind::first_diff_1d;
  if (name == "first_diff_2d" || name == "L2d") return RegularizerKind::first_diff_2d;
  throw ContractViolation("unknown regularizer '" + name + "'");
}

/// `dim` is n for the 1-D kinds and the grid side N for first_diff_2d.
inline std::shared_ptr<const LinearOperator> make_L(RegularizerKind kind, Index dim) {
  switch (kind) {
    case RegularizerKind::identity:
      detail::require(dim >= 1, "make_L(identity): n must be positive");
      return std::make_shared<IdentityOperator>(dim);
    case RegularizerKind::first_diff_1d:
      detail::require(dim >= 2, "make_L(first_diff_1d): n must be at least 2");
      return std::make_shared<FirstDifferenceOperator>(dim);
    case RegularizerKind::first_diff_2d:
      detail::require(dim >= 2, "make_L(first_diff_2d): N must be at least 2");
      return std::make_shared<Stacked2DDifferenceOperator>(dim);
  }
  throw ContractViolation("make_L: unknown kind");
}

/// b = b_true + e with e i.i.d. standard normal from Rng(seed), rescaled so
/// that ||e|| = epsilon ||b_true|| exactly.
inline Vector add_noise(VectorConstRef b_true, double epsilon, std::uint64_t seed) {
  detail::require(epsilon > 0.0, "add_noise: epsilon must be positive");
  const double b_norm = b_true.norm();
  detail::require(b_norm > 0.0, "add_noise: b_true is zero");
  Rng rng(seed);
  Vector e = rng.normal_vector(b_true.size());
  e *= epsilon * b_norm / e.norm();
  return b_true + e;
}

//-----------------------------------------------------------------------------

struct ProblemInstance {
  std::string name;
  std::shared_ptr<const LinearOperator> A;
  std::shared_ptr<const LinearOperator> L;
  RegularizerKind L_kind = RegularizerKind::first_diff_1d;
  Vector x_true;
  Vector b_true;
  Vector b;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  /// Problem size parameter as given to the generator (n, or N for 2-D).
  Index size = 0;
};

struct ProblemInfo {
  std::string name;
  std::string description;
  bool two_dimensional = false;
  bool requires_even = false;
};

inline const std::vector<ProblemInfo>& list_problems() {
  static const std::vector<ProblemInfo> problems = {
      {"shaw", "one-dimensional image restoration (severely ill-posed)", false, true},
      {"baart", "one-dimensional gravity surveying (severely ill-posed)", false, true},
      {"heat", "inverse heat equation (moderately ill-posed)", false, true},
      {"deriv2", "computation of the second derivative (mildly ill-posed)", false, false},
      {"blur2d", "separable Gaussian blur of an N x N image, sigma = 2", true, false},
  };
  return problems;
}

inline constexpr double kDefaultPsfSigma = 2.0;

inline RegularizerKind default_regularizer(const std::string& problem) {
  return problem == "blur2d" ? RegularizerKind::first_diff_2d : RegularizerKind::first_diff_1d;
}

/// Builds a named problem with noisy data. For "blur2d", `size` is the grid
/// side N and the unknown has N^2 entries.
inline ProblemInstance make_problem(const std::string& name, Index size, double epsilon,
                                    std::uint64_t seed,
                                    std::optional<RegularizerKind> l_kind = std::nullopt) {
  ProblemInstance p;
  p.name = name;
  p.epsilon = epsilon;
  p.seed = seed;
  p.size = size;
  p.L_kind = l_kind.value_or(default_regularizer(name));

  auto take = [&p](auto disc) {
    using Op = decltype(disc.A);
    p.A = std::make_shared<Op>(std::move(disc.A));
    p.x_true = std::move(disc.x_true);
    p.b_true = std::move(disc.b_true);
  };
  if (name == "shaw")
    take(gen_shaw(size));
  else if (name == "baart")
    take(gen_baart(size));
  else if (name == "heat")
    take(gen_heat(size));
  else if (name == "deriv2")
    take(gen_deriv2(size));
  else if (name == "blur2d")
    take(gen_blur2d(size, kDefaultPsfSigma));
  else
    throw ContractViolation("unknown problem '" + name + "'");

  const Index n = p.A->cols();
  if (p.L_kind == RegularizerKind::first_diff_2d) {
    detail::require(name == "blur2d", "first_diff_2d needs a 2-D problem");
    p.L = make_L(p.L_kind, size);
  } else {
    p.L = make_L(p.L_kind, n);
  }
  p.b = add_noise(p.b_true, epsilon, seed);
  return p;
}

//-----------------------------------------------------------------------------
// Serialization: "HYBPROB1", u64 little-endian header length, UTF-8 JSON
// header, then each vector listed in header["vectors"] as little-endian f64.

namespace detail {

inline constexpr char kProblemMagic[8] = {'H', 'Y', 'B', 'P', 'R', 'O', 'B', '1'};

inline void write_u64_le(std::ostream& out, std::uint64_t value) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

inline std::uint64_t read_u64_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw IoError("problem file: truncated while reading a 64-bit field");
  std::uint64_t value = 0;
  for (int i = 7; i >= 0; --i) value = (value << 8) | bytes[i];
  return value;
}

inline void write_f64_vector(std::ostream& out, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) write_u64_le(out, std::bit_cast<std::uint64_t>(v[i]));
}

inline Vector read_f64_vector(std::istream& in, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = std::bit_cast<double>(read_u64_le(in));
  return v;
}

}  // namespace detail

inline void write_problem(const ProblemInstance& p, std::ostream& out) {
  nlohmann::ordered_json header;
  header["name"] = p.name;
  header["n"] = p.A->cols();
  header["m"] = p.A->rows();
  header["size"] = p.size;
  header["epsilon"] = p.epsilon;
  header["seed"] = p.seed;
  header["L"] = to_string(p.L_kind);
  header["vectors"] = nlohmann::ordered_json::array(
      {{{"name", "x_true"}, {"length", p.x_true.size()}},
       {{"name", "b_true"}, {"length", p.b_true.size()}},
       {{"name", "b"}, {"length", p.b.size()}}});
  const std::string text = header.dump();
  out.write(detail::kProblemMagic, 8);
  detail::write_u64_le(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  detail::write_f64_vector(out, p.x_true);
  detail::write_f64_vector(out, p.b_true);
  detail::write_f64_vector(out, p.b);
}

/// Reads the vectors and regenerates A and L from the header.
inline ProblemInstance read_problem(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kProblemMagic, 8) != 0)
    throw IoError("problem file: bad magic");
  const std::uint64_t header_len = detail::read_u64_le(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw IoError("problem file: truncated header");
  const auto header = nlohmann::json::parse(text);

  ProblemInstance p = make_problem(header.at("name").get<std::string>(),
                                   header.at("size").get<Index>(),
                                   header.at("epsilon").get<double>(),
                                   header.at("seed").get<std::uint64_t>(),
                                   regularizer_from_string(header.at("L").get<std::string>()));
  for (const auto& entry : header.at("vectors")) {
    const auto vname = entry.at("name").get<std::string>();
    Vector v = detail::read_f64_vector(in, entry.at("length").get<Index>());
    if (vname == "x_true")
      p.x_true = std::move(v);
    else if (vname == "b_true")
      p.b_true = std::move(v);
    else if (vname == "b")
      p.b = std::move(v);
  }
  return p;
}

inline void save_problem(const ProblemInstance& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_problem(p, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline ProblemInstance load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_problem(in);
}

}  // namespace hybreg
