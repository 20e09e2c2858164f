#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace treevar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::MatrixXi;

// Error taxonomy, mapped onto process exit codes by the CLI driver:
//   io/parse -> 2, infeasible configuration -> 3, numerical failure -> 4,
//   sampler adaptation failure -> 5.
enum class ErrorKind { io, infeasible, numerical, adaptation };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error io_error(const std::string& m) { return Error(ErrorKind::io, m); }
inline Error infeasible_error(const std::string& m) { return Error(ErrorKind::infeasible, m); }
inline Error numerical_error(const std::string& m) { return Error(ErrorKind::numerical, m); }
inline Error adaptation_error(const std::string& m) { return Error(ErrorKind::adaptation, m); }

// Self-contained RNG: mt19937_64 plus explicit transforms, so streams are
// identical across standard libraries (std::normal_distribution is not
// portable across implementations).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // uniform on (0,1): 53-bit mantissa, never exactly 0 or 1
  double uniform() {
    const double u = (static_cast<double>(eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller with one cached variate
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * M_PI * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
  }

  // Marsaglia-Tsang; unit scale
  double gamma(double shape) {
    if (!(shape > 0.0)) throw numerical_error("gamma shape must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
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
      const double u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  double beta(double a, double b) {
    const double ga = gamma(a), gb = gamma(b);
    return ga / (ga + gb);
  }

  // shape a, scale b (mean b/(a-1) for a>1)
  double inv_gamma(double a, double b) { return b / gamma(a); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  Vector dirichlet(double alpha, int n) {
    Vector g(n);
    for (int i = 0; i < n; ++i) g[i] = gamma(alpha);
    return g / g.sum();
  }

  Matrix normal_matrix(int r, int c) {
    Matrix out(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) out(i, j) = normal();
    return out;
  }

  std::uint64_t raw() { return eng_(); }

  // integer in [0, n)
  int uniform_int(int n) { return static_cast<int>(std::min<double>(n - 1, std::floor(uniform() * n))); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// stable sub-stream derivation, used to decouple per-replicate / per-draw noise
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace treevar
