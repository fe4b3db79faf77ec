#pragma once

#include "srbm/model.hpp"

#include <vector>

namespace srbm {

// One reflection step: z = w + R dy, z >= 0, dy >= 0, z_i dy_i = 0.
struct ReflectResult {
  Vec z;
  Vec dy;
};

struct RegulatedPath {
  std::vector<Vec> phi;
  std::vector<Vec> eta;  // cumulative pushing
};

// Orthant reflection solver for a fixed reflection matrix. For d <= 4 the
// linear complementarity problem is solved by enumerating active sets in
// ascending size (lexicographic within a size) with the inverses of every
// principal submatrix cached; larger d falls back to complementary pivoting.
class Reflector {
 public:
  static constexpr int kEnumerationMaxDim = 4;
  static constexpr double kTol = 1e-12;

  explicit Reflector(const Mat& refl);

  ReflectResult reflect(const Vec& w) const;

  // In-place variant for the simulation hot path; dy is not produced.
  void reflect_in_place(Vec& w) const;

  int dim() const { return d_; }

 private:
  struct ActiveSet {
    std::vector<int> idx;
    Mat inv;  // inverse of R restricted to idx x idx
  };

  ReflectResult reflect_enumerate(const Vec& w) const;
  ReflectResult reflect_lemke(const Vec& w) const;

  int d_;
  Mat refl_;
  std::vector<ActiveSet> sets_;  // excludes the empty set
};

ReflectResult reflect_step(const Vec& w, const ModelParams& params);

// Brute-force verifier: tries all 2^d active sets in bitmask order with its
// own Gaussian elimination. Meant for tests.
ReflectResult reflect_step_oracle(const Vec& w, const ModelParams& params);

// Skorokhod map for a piecewise-constant driver sampled at grid points.
RegulatedPath regulate_path(const std::vector<Vec>& driver,
                            const ModelParams& params);

}  // namespace srbm
