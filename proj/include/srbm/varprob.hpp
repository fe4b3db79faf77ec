#pragma once

#include "srbm/model.hpp"

#include <array>
#include <vector>

namespace srbm {

// Explicit solution of the 2-D variational problem via cones of boundary
// influence. Index 0 refers to face F_1 = {x_1 = 0}, index 1 to F_2.
struct Vp2dFace {
  Vec p;            // orthogonal to column i of R, |Sigma p|_D = 1
  Vec a;            // exit velocity theta - 2 (theta' p) Sigma p
  bool reflective;  // a_i < 0
  Vec e;            // direction along the face
  Vec sigma_n;      // Sigma n_i with |Sigma n_i|_D = 1
  Vec atilde;       // tilted velocity; second cone generator
  Mat cone_inv;     // inverse of [e atilde] when nondegenerate
  bool cone_degenerate = false;
};

struct Vp2dSolution {
  std::array<Vp2dFace, 2> face;
  Vec theta;
  Mat d_mat;  // D = Sigma^{-1}
  Mat refl;   // unit-diagonal reflection matrix
};

Vp2dSolution solve_vp_2d(const ModelParams& params);

bool in_cone(const Vp2dFace& face, const Vec& z);

// Interior straight-line cost |theta|_D |z|_D - <theta, z>_D.
double vp2d_cost_interior(const Vp2dSolution& sol, const Vec& z);
// Boundary-influenced cost <atilde_i - theta, z>_D.
double vp2d_cost_face(const Vp2dSolution& sol, int i, const Vec& z);
// Optimal value I(z) of the VP from the origin to z.
double vp2d_cost(const Vp2dSolution& sol, const Vec& z);

struct InfimumResult {
  double value;
  Vec argmin;
};

// inf of I over B, attained on the segment {z >= 0, z_1 + z_2 = 1}.
InfimumResult infimum_over_B_2d(const Vp2dSolution& sol);

// Locally optimal cost between two points with the path held on face F_K.
struct LocalCost {
  std::vector<int> K;
  std::vector<int> J_star;
  Mat B_J;  // card(J) x d
  Mat A_J;  // d x d
  double alpha = 0.0;
  Vec lambda;
  double cost = 0.0;
  Vec b_K;
  double duration = 0.0;
};

// Face index sets are 0-based, sorted, without duplicates.
LocalCost local_cost(const ModelParams& params, const std::vector<int>& K,
                     const Vec& w, const Vec& v);

// Every J subset of K that passes the optimality conditions (the theory says
// exactly one); a verification aid for tests and debugging.
std::vector<std::vector<int>> local_cost_passing_sets(
    const ModelParams& params, const std::vector<int>& K, const Vec& w,
    const Vec& v);

// Cost as a function of the displacement u = v - w alone.
double local_cost_direction(const ModelParams& params,
                            const std::vector<int>& K, const Vec& u);

// Throws ConditionViolated unless (w, v) is an admissible pair for K.
void check_pair_condition(const std::vector<int>& K, const Vec& w, const Vec& v);

double d_inner(const Mat& d_mat, const Vec& a, const Vec& b);
double d_norm(const Mat& d_mat, const Vec& a);

}  // namespace srbm
