#pragma once

#include "srbm/model.hpp"
#include "srbm/rng.hpp"
#include "srbm/varprob.hpp"

#include <optional>
#include <vector>

namespace srbm {

enum class SubsolutionKind { kExact2D, kScaledL1 };

// Subsolution of the VP. Exact2D: tbar(v) = inf_B I - I(v) from the explicit
// 2-D solution. ScaledL1: tbar(v) = (1 - |v|_1) / r.
struct Subsolution {
  SubsolutionKind kind = SubsolutionKind::kScaledL1;
  double r = 1.0;
  std::optional<Vp2dSolution> vp2d;
  double inf_B = 1.0;
};

Subsolution make_exact_2d(const ModelParams& params);
Subsolution make_scaled_l1(double r);

// Deterministic mesh of the direction set for face K: v_i = 0 on K,
// |v|_1 = 1, some coordinate outside K nonnegative.
std::vector<Vec> direction_grid(int d, const std::vector<int>& K, int resolution);

struct ScalingResult {
  double r;
  std::vector<int> K;  // face achieving the maximum
  Vec direction;       // maximizer, |direction|_1 = 1
};

// max of |v|_1 / I*_K(v) over all K strictly inside L and v in the direction
// set: mesh scan followed by a shrinking pattern search around each face's
// best mesh point. In diagnostic mode a vanishing denominator yields r = inf
// instead of an error.
ScalingResult compute_scaling_r(const ModelParams& params, int resolution,
                                int refine_iters, bool diagnostic = false);

double tbar(const Subsolution& sub, const Vec& v);

struct InequalityReport {
  int samples = 0;
  int passed = 0;
  int violations = 0;
  double worst_margin = 0.0;  // max of tbar(w) - tbar(v) - I*_K(w, v)
};

// Samples admissible (K, w, v) and checks tbar(w) - tbar(v) <= I*_K(w, v).
InequalityReport subsolution_inequality_check(const Subsolution& sub,
                                              const ModelParams& params,
                                              int samples, Rng& rng,
                                              double slack = 1e-9);

// V(z) = delta tbar(z) / log(split_r).
double importance_value(const Subsolution& sub, double delta, int split_r,
                        const Vec& z);

// Smallest j >= 0 with z in C_j, where C_0 = B and C_j = {V <= (j-1) delta/n}.
int level_index(const Subsolution& sub, double delta, int split_r, int n,
                const Vec& z);

}  // namespace srbm
