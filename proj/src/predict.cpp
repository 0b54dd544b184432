#include "bsp/predict.hpp"

#include <cmath>

namespace bsp {

namespace {

// Values this close count as tied, so that mathematically exact ties
// (which the log-domain mixture reproduces only to rounding) still
// resolve to the lowest index.
double tie_tol(double reference) {
  return 1e-12 * std::max(1.0, std::abs(reference));
}

}  // namespace

Symbol theta_predict(const Vector& p) {
  if (p.size() == 0) throw LossError("empty probability vector");
  Symbol best = 0;
  for (int i = 1; i < int(p.size()); ++i)
    if (p[i] > p[best] + tie_tol(p[best])) best = i;
  return best;
}

int lambda_predict(const Vector& p, const Matrix& loss) {
  if (loss.rows() != p.size())
    throw LossError("loss matrix rows must match the alphabet");
  if (loss.cols() < 1) throw LossError("need at least one action");
  const Vector expected = loss.transpose() * p;
  int best = 0;
  for (int y = 1; y < int(expected.size()); ++y)
    if (expected[y] < expected[best] - tie_tol(expected[best])) best = y;
  return best;
}

Matrix error_loss(int alphabet) {
  return Matrix::Ones(alphabet, alphabet) - Matrix::Identity(alphabet, alphabet);
}

NormalizedLoss normalize_loss(const Matrix& raw) {
  if (raw.size() == 0) throw LossError("empty loss matrix");
  if (!raw.allFinite()) throw LossError("loss entries must be finite");
  NormalizedLoss out;
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  out.offset = lo;
  out.scale = hi - lo;
  if (out.scale == 0.0) {
    out.entries = Matrix::Zero(raw.rows(), raw.cols());
    out.degenerate = true;
  } else {
    out.entries = (raw.array() - lo) / out.scale;
  }
  return out;
}

LossSchedule LossSchedule::constant(Matrix m) {
  if (m.size() == 0) throw LossError("empty loss matrix");
  LossSchedule s;
  s.matrices_.push_back(std::move(m));
  return s;
}

LossSchedule LossSchedule::per_step(std::vector<Matrix> ms, bool cycle) {
  if (ms.empty()) throw LossError("per-step schedule needs matrices");
  const long rows = ms.front().rows();
  const long cols = ms.front().cols();
  for (const Matrix& m : ms)
    if (m.rows() != rows || m.cols() != cols)
      throw LossError("schedule matrices must share one shape");
  LossSchedule s;
  s.matrices_ = std::move(ms);
  s.cycle_ = cycle;
  return s;
}

const Matrix& LossSchedule::at(long t) const {
  if (t < 1) throw LossError("time steps are 1-based");
  const long m = long(matrices_.size());
  if (m == 1) return matrices_.front();
  const long i = cycle_ ? (t - 1) % m : std::min(t - 1, m - 1);
  return matrices_[std::size_t(i)];
}

}  // namespace bsp
