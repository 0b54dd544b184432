#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace bsp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Symbol = int;
using History = std::vector<Symbol>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// Neumaier-compensated accumulator. Long expectation sums over
// 2^24-leaf trees lose digits with naive +=.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void merge(const KahanSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// log(sum_i exp(v_i)) over finite/-inf entries.
inline double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

inline double log_choose(long n, long k) {
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
         std::lgamma(double(n - k) + 1.0);
}

inline bool is_prob_vector(const Vector& p, double tol = 1e-12) {
  if (p.size() == 0) return false;
  if ((p.array() < 0.0).any()) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

// Integer power; small exponents only.
inline long ipow(long base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Number of histories of length < depth over an alphabet of size N.
inline long history_count(int alphabet, int depth) {
  long c = 0;
  long block = 1;
  for (int l = 0; l < depth; ++l) {
    c += block;
    block *= alphabet;
  }
  return c;
}

// Canonical index of a history among all histories, ordered by length
// then lexicographically: idx(eps)=0, idx((0))=1, ..., idx((N-1))=N,
// idx((0,0))=N+1, ...
inline long history_index(const History& h, int alphabet) {
  long digits = 0;
  for (Symbol s : h) digits = digits * alphabet + s;
  return history_count(alphabet, int(h.size())) + digits;
}

// Portable uniform double in [0,1) from a 64-bit generator draw.
template <class Rng>
double canonical_uniform(Rng& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

// Derives a stream seed for parallel block b of a master seed.
// splitmix64 step keeps blocks decorrelated.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t block) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (block + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace bsp
