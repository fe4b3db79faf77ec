#pragma once

#include "srbm/common.hpp"

namespace srbm {

// SRBM data (drift, covariance, reflection matrix) with the derived
// quantities every other module needs. Immutable once validated.
struct ModelParams {
  int d = 0;
  Vec theta;
  Mat sigma;
  Mat sigma_inv;   // D = sigma^{-1}
  Mat sigma_chol;  // lower triangular, L L^T = sigma
  Mat refl;
  bool m_matrix = false;  // whether refl is a nonsingular M-matrix
};

// Scale parameter n, inner radius epsilon and the (scaled) starting point.
// A_n = {sum z <= epsilon / n}, B = {sum z >= 1}.
struct Scenario {
  int n = 1;
  double epsilon = 0.15;
  Vec start;

  double a_level() const { return epsilon / n; }
  static constexpr double b_level() { return 1.0; }
  bool in_a(const Vec& z) const { return z.sum() <= a_level(); }
  static bool in_b(const Vec& z) { return z.sum() >= b_level(); }
};

// Validates (theta, sigma, refl). With m_matrix_required the reflection
// matrix must be a nonsingular M-matrix and theta strictly negative.
ModelParams validate(const Vec& theta, const Mat& sigma, const Mat& refl,
                     bool m_matrix_required);

Scenario make_scenario(const ModelParams& params, int n, double epsilon,
                       const Vec& start);

// Two-dimensional positive recurrence test after column-normalizing R to a
// unit diagonal.
bool check_2d_recurrence(const ModelParams& params);

// R with each column divided by its diagonal entry (d = 2 only).
Mat unit_diagonal_refl(const Mat& refl);

bool is_completely_s(const Mat& m);
bool is_m_matrix(const Mat& m);

}  // namespace srbm
