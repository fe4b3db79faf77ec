#include "srbm/subsolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace srbm {

Subsolution make_exact_2d(const ModelParams& params) {
  Subsolution sub;
  sub.kind = SubsolutionKind::kExact2D;
  sub.vp2d = solve_vp_2d(params);
  sub.inf_B = infimum_over_B_2d(*sub.vp2d).value;
  sub.r = 1.0;
  return sub;
}

Subsolution make_scaled_l1(double r) {
  if (!(r > 0.0))
    throw Error(ErrorCode::kInvalidConfig, "scaling factor r must be positive");
  Subsolution sub;
  sub.kind = SubsolutionKind::kScaledL1;
  sub.r = r;
  sub.inf_B = 1.0;
  return sub;
}

std::vector<Vec> direction_grid(int d, const std::vector<int>& K, int resolution) {
  if (resolution < 2)
    throw Error(ErrorCode::kInvalidConfig, "resolution must be >= 2");
  std::vector<bool> in_k(d, false);
  for (int i : K) {
    if (i < 0 || i >= d)
      throw Error(ErrorCode::kDimensionMismatch, "face index out of range");
    in_k[i] = true;
  }
  std::vector<int> free;
  for (int j = 0; j < d; ++j)
    if (!in_k[j]) free.push_back(j);
  const int m = static_cast<int>(free.size());
  if (m == 0) throw Error(ErrorCode::kEmptySet, "direction set is empty for K = L");

  // Integer compositions of `resolution` into m parts, each part signed by a
  // pattern; zero parts carry no sign, so duplicates are removed by key.
  std::set<std::vector<int>> seen;
  std::vector<Vec> out;
  std::vector<int> parts(m, 0);
  auto emit_patterns = [&]() {
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      if (mask == (1u << m) - 1) continue;  // all negative
      std::vector<int> key(m);
      for (int i = 0; i < m; ++i) key[i] = (mask & (1u << i)) ? -parts[i] : parts[i];
      if (!seen.insert(key).second) continue;
      Vec v = Vec::Zero(d);
      for (int i = 0; i < m; ++i)
        v(free[i]) = static_cast<double>(key[i]) / resolution;
      out.push_back(v);
    }
  };
  auto compose = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == m - 1) {
      parts[pos] = remaining;
      emit_patterns();
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      parts[pos] = k;
      self(self, pos + 1, remaining - k);
    }
  };
  compose(compose, 0, resolution);
  return out;
}

namespace {

bool in_direction_set(const Vec& v, const std::vector<bool>& in_k) {
  for (int j = 0; j < v.size(); ++j)
    if (!in_k[j] && v(j) >= 0.0) return true;
  return false;
}

struct RatioEval {
  const ModelParams& params;
  const std::vector<int>& K;
  bool diagnostic;

  // |v|_1 / I*_K(v); +inf when the cost vanishes.
  double operator()(const Vec& v) const {
    const double cost = local_cost_direction(params, K, v);
    if (cost <= 1e-12) {
      if (!diagnostic)
        throw Error(ErrorCode::kDegenerateCost,
                    "local cost vanishes on the direction set");
      return std::numeric_limits<double>::infinity();
    }
    return v.lpNorm<1>() / cost;
  }
};

}  // namespace

ScalingResult compute_scaling_r(const ModelParams& params, int resolution,
                                int refine_iters, bool diagnostic) {
  const int d = params.d;
  ScalingResult best{0.0, {}, Vec::Zero(d)};
  for (unsigned mask = 0; mask + 1 < (1u << d); ++mask) {
    std::vector<int> K;
    std::vector<bool> in_k(d, false);
    for (int i = 0; i < d; ++i)
      if (mask & (1u << i)) {
        K.push_back(i);
        in_k[i] = true;
      }
    const RatioEval ratio{params, K, diagnostic};

    double face_best = -1.0;
    Vec face_arg;
    for (const Vec& v : direction_grid(d, K, resolution)) {
      const double q = ratio(v);
      if (q > face_best) {
        face_best = q;
        face_arg = v;
      }
    }
    if (std::isinf(face_best)) return {face_best, K, face_arg};

    // Compass search over the free coordinates; the ratio is scale-free so
    // each trial point is renormalized to |v|_1 = 1.
    std::vector<int> free;
    for (int j = 0; j < d; ++j)
      if (!in_k[j]) free.push_back(j);
    std::vector<Vec> moves;
    for (std::size_t a = 0; a < free.size(); ++a) {
      moves.push_back(Vec::Unit(d, free[a]));
      moves.push_back(-Vec::Unit(d, free[a]));
      for (std::size_t b = a + 1; b < free.size(); ++b) {
        const Vec e = Vec::Unit(d, free[a]) - Vec::Unit(d, free[b]);
        moves.push_back(e);
        moves.push_back(-e);
      }
    }
    double step = 1.0 / resolution;
    for (int it = 0; it < refine_iters && step > 1e-13; ++it) {
      bool improved = false;
      for (const Vec& mv : moves) {
        Vec trial = face_arg + step * mv;
        for (int i : K) trial(i) = 0.0;
        const double norm1 = trial.lpNorm<1>();
        if (norm1 <= 1e-15) continue;
        trial /= norm1;
        if (!in_direction_set(trial, in_k)) continue;
        const double q = ratio(trial);
        if (std::isinf(q)) return {q, K, trial};
        if (q > face_best) {
          face_best = q;
          face_arg = trial;
          improved = true;
        }
      }
      if (!improved) step *= 0.5;
    }
    if (face_best > best.r) best = {face_best, K, face_arg};
  }
  return best;
}

double tbar(const Subsolution& sub, const Vec& v) {
  if (sub.kind == SubsolutionKind::kScaledL1)
    return (1.0 - v.lpNorm<1>()) / sub.r;
  return sub.inf_B - vp2d_cost(*sub.vp2d, v);
}

InequalityReport subsolution_inequality_check(const Subsolution& sub,
                                              const ModelParams& params,
                                              int samples, Rng& rng,
                                              double slack) {
  InequalityReport rep;
  const int d = params.d;
  const unsigned full = (1u << d) - 1;
  for (int s = 0; s < samples; ++s) {
    const unsigned mask = static_cast<unsigned>(rng() % full);
    std::vector<int> K;
    for (int i = 0; i < d; ++i)
      if (mask & (1u << i)) K.push_back(i);
    Vec w = Vec::Zero(d), v = Vec::Zero(d);
    for (int j = 0; j < d; ++j) {
      if (mask & (1u << j)) continue;
      w(j) = 1.0 - rng.uniform();  // (0, 1]
      v(j) = 1.0 - rng.uniform();
      if (rng.uniform() < 0.25) {
        if (rng.uniform() < 0.5)
          w(j) = 0.0;
        else
          v(j) = 0.0;
      }
    }
    const double cost = local_cost(params, K, w, v).cost;
    const double margin = tbar(sub, w) - tbar(sub, v) - cost;
    ++rep.samples;
    if (rep.samples == 1 || margin > rep.worst_margin) rep.worst_margin = margin;
    if (margin <= slack)
      ++rep.passed;
    else
      ++rep.violations;
  }
  return rep;
}

double importance_value(const Subsolution& sub, double delta, int split_r,
                        const Vec& z) {
  return delta * tbar(sub, z) / std::log(static_cast<double>(split_r));
}

int level_index(const Subsolution& sub, double delta, int split_r, int n,
                const Vec& z) {
  if (Scenario::in_b(z)) return 0;
  const double v = importance_value(sub, delta, split_r, z);
  // j - 1 >= n V / delta
  const double x = v * n / delta;
  if (x <= 0.0) return 1;
  return 1 + static_cast<int>(std::ceil(x));
}

}  // namespace srbm
