#pragma once

#include <variant>
#include <vector>

#include "bsp/env.hpp"

namespace bsp {

struct LossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Prediction of the most probable next symbol; ties break to the lowest
// index so runs are reproducible and the consistent-tie-break
// requirement of Pareto comparisons is met.
Symbol theta_predict(const Vector& p);

// Action minimizing the p-expected loss sum_x p[x] * loss(x, y), again
// lowest index on ties. `loss` is |X| rows by |Y| columns.
int lambda_predict(const Vector& p, const Matrix& loss);

// Unit loss for a wrong prediction, zero for a right one. Y = X here.
Matrix error_loss(int alphabet);

struct NormalizedLoss {
  Matrix entries;      // affine image of the raw matrix in [0,1]
  double scale = 0.0;  // max - min of the raw entries (p_Delta for games)
  double offset = 0.0; // raw minimum
  bool degenerate = false;  // all raw entries equal -> all-zero matrix
};

NormalizedLoss normalize_loss(const Matrix& raw);

// Constant or per-step loss matrices. A per-step schedule may cycle
// (partial prediction alternating dummy and real steps) or clamp to its
// last entry.
class LossSchedule {
 public:
  static LossSchedule constant(Matrix m);
  static LossSchedule per_step(std::vector<Matrix> ms, bool cycle = true);

  // 1-based time step.
  const Matrix& at(long t) const;
  bool constant_schedule() const { return matrices_.size() == 1; }
  long action_count() const { return matrices_.front().cols(); }
  long symbol_count() const { return matrices_.front().rows(); }
  const std::vector<Matrix>& matrices() const { return matrices_; }
  bool cycles() const { return cycle_; }

 private:
  std::vector<Matrix> matrices_;
  bool cycle_ = true;
};

// Challenger/candidate prediction schemes evaluated alongside the
// informed and universal predictors.
//
// GreedyPredictor acts greedily on its model's conditional: argmax for
// error counting, loss-argmin for general losses. StaticPredictor plays
// one fixed action; TablePredictor maps every history of length < n to
// an action through the canonical history index.
struct GreedyPredictor {
  Environment model;
};
struct StaticPredictor {
  int action = 0;
};
struct TablePredictor {
  std::vector<int> actions;
};
using Predictor = std::variant<GreedyPredictor, StaticPredictor, TablePredictor>;

}  // namespace bsp
