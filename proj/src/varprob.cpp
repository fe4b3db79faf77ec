#include "srbm/varprob.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace srbm {

double d_inner(const Mat& d_mat, const Vec& a, const Vec& b) {
  return a.dot(d_mat * b);
}

double d_norm(const Mat& d_mat, const Vec& a) {
  return std::sqrt(std::max(d_inner(d_mat, a, a), 0.0));
}

namespace {

constexpr double kConeTol = 1e-12;
constexpr double kConditionTol = 1e-10;
constexpr double kGoldenTol = 1e-13;

double cross2(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

Vec make_vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

Vp2dSolution solve_vp_2d(const ModelParams& params) {
  if (params.d != 2)
    throw Error(ErrorCode::kDimensionMismatch, "explicit VP solution needs d = 2");
  if (!check_2d_recurrence(params))
    throw Error(ErrorCode::kRecurrenceViolated,
                "drift and reflection matrix violate 2-D positive recurrence");
  Vp2dSolution sol;
  sol.theta = params.theta;
  sol.d_mat = params.sigma_inv;
  sol.refl = unit_diagonal_refl(params.refl);
  const Mat& sigma = params.sigma;
  const Vec& theta = params.theta;

  for (int i = 0; i < 2; ++i) {
    Vp2dFace& f = sol.face[i];
    const Vec col = sol.refl.col(i);
    Vec p = make_vec2(-col(1), col(0));
    // |Sigma p|_D^2 = p' Sigma p.
    p /= std::sqrt(p.dot(sigma * p));
    const int lead = std::abs(p(0)) > 1e-15 ? 0 : 1;
    if (p(lead) < 0.0) p = -p;
    f.p = p;
    f.a = theta - 2.0 * theta.dot(p) * (sigma * p);
    f.reflective = f.a(i) < 0.0;
    // Face F_1 = {x_1 = 0} runs along (0, 1); F_2 along (1, 0).
    f.e = i == 0 ? make_vec2(0.0, 1.0) : make_vec2(1.0, 0.0);
    Vec normal = Vec::Unit(2, i);
    normal /= std::sqrt(normal.dot(sigma * normal));
    f.sigma_n = sigma * normal;
    f.atilde = d_inner(sol.d_mat, f.a, f.e) * f.e -
               d_inner(sol.d_mat, f.a, f.sigma_n) * f.sigma_n;
    Mat gen(2, 2);
    gen.col(0) = f.e;
    gen.col(1) = f.atilde;
    const double det = gen.determinant();
    if (std::abs(det) <= 1e-14 * std::max(1.0, f.atilde.norm())) {
      f.cone_degenerate = true;
      f.cone_inv = Mat::Zero(2, 2);
    } else {
      f.cone_inv = gen.inverse();
    }
  }
  return sol;
}

bool in_cone(const Vp2dFace& face, const Vec& z) {
  if (!face.reflective) return false;
  const double scale = std::max(z.norm(), 1e-300);
  if (face.cone_degenerate) {
    if (std::abs(cross2(face.e, z)) > kConeTol * scale) return false;
    if (face.atilde.dot(face.e) < 0.0) return true;  // cone is the whole line
    return face.e.dot(z) >= -kConeTol * scale;
  }
  const Vec coef = face.cone_inv * z;
  return coef(0) >= -kConeTol * scale && coef(1) >= -kConeTol * scale;
}

double vp2d_cost_interior(const Vp2dSolution& sol, const Vec& z) {
  return d_norm(sol.d_mat, sol.theta) * d_norm(sol.d_mat, z) -
         d_inner(sol.d_mat, sol.theta, z);
}

double vp2d_cost_face(const Vp2dSolution& sol, int i, const Vec& z) {
  return d_inner(sol.d_mat, sol.face[i].atilde - sol.theta, z);
}

double vp2d_cost(const Vp2dSolution& sol, const Vec& z) {
  if (z.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const bool c1 = in_cone(sol.face[0], z);
  const bool c2 = in_cone(sol.face[1], z);
  double value;
  if (c1 && c2)
    value = std::min(vp2d_cost_face(sol, 0, z), vp2d_cost_face(sol, 1, z));
  else if (c1)
    value = vp2d_cost_face(sol, 0, z);
  else if (c2)
    value = vp2d_cost_face(sol, 1, z);
  else
    value = vp2d_cost_interior(sol, z);
  return std::max(value, 0.0);
}

InfimumResult infimum_over_B_2d(const Vp2dSolution& sol) {
  auto point = [](double s) { return make_vec2(s, 1.0 - s); };
  auto cost_at = [&](double s) { return vp2d_cost(sol, point(s)); };

  // Breakpoints: where the segment meets a cone generator ray.
  std::vector<double> brk{0.0, 1.0};
  for (const auto& f : sol.face) {
    if (!f.reflective) continue;
    for (const Vec& g : {f.e, f.atilde}) {
      const double tot = g(0) + g(1);
      if (tot <= 1e-15) continue;
      const double s = g(0) / tot;
      if (s > 0.0 && s < 1.0) brk.push_back(s);
    }
  }
  std::sort(brk.begin(), brk.end());

  InfimumResult best{std::numeric_limits<double>::infinity(), point(0.0)};
  auto consider = [&](double s) {
    const double c = cost_at(s);
    if (c < best.value) best = {c, point(s)};
  };
  for (double s : brk) consider(s);

  constexpr double kInvPhi = 0.6180339887498949;
  for (std::size_t k = 0; k + 1 < brk.size(); ++k) {
    double lo = brk[k], hi = brk[k + 1];
    if (hi - lo < 1e-15) continue;
    const Vec mid = point(0.5 * (lo + hi));
    if (in_cone(sol.face[0], mid) || in_cone(sol.face[1], mid)) continue;
    // Interior piece: convex along the segment, golden-section search.
    auto f = [&](double s) { return vp2d_cost_interior(sol, point(s)); };
    double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > kGoldenTol) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kInvPhi * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kInvPhi * (hi - lo);
        f2 = f(x2);
      }
    }
    consider(0.5 * (lo + hi));
  }
  return best;
}

void check_pair_condition(const std::vector<int>& K, const Vec& w, const Vec& v) {
  const auto d = static_cast<int>(w.size());
  if (v.size() != d)
    throw Error(ErrorCode::kDimensionMismatch, "w and v dimensions differ");
  if ((w.array() < 0.0).any() || (v.array() < 0.0).any())
    throw Error(ErrorCode::kConditionViolated, "w and v must lie in the orthant");
  if ((w - v).cwiseAbs().maxCoeff() == 0.0)
    throw Error(ErrorCode::kConditionViolated, "w and v must differ");
  std::vector<bool> in_k(d, false);
  for (int i : K) {
    if (i < 0 || i >= d)
      throw Error(ErrorCode::kConditionViolated, "face index out of range");
    in_k[i] = true;
    if (w(i) != 0.0 || v(i) != 0.0)
      throw Error(ErrorCode::kConditionViolated,
                  "coordinates in K must vanish at both endpoints");
  }
  for (int j = 0; j < d; ++j)
    if (!in_k[j] && w(j) == 0.0 && v(j) == 0.0)
      throw Error(ErrorCode::kConditionViolated,
                  "coordinates outside K must be nonzero at an endpoint");
}

namespace {

struct Candidate {
  bool passes = false;
  LocalCost lc;
};

Candidate evaluate_subset(const ModelParams& params, const std::vector<int>& K,
                          const std::vector<int>& J, const Vec& u) {
  const int d = params.d;
  const Mat& dm = params.sigma_inv;
  Candidate c;
  LocalCost& lc = c.lc;
  lc.K = K;
  lc.J_star = J;
  const int k = static_cast<int>(J.size());
  Mat r_lj(d, k);
  for (int c2 = 0; c2 < k; ++c2) r_lj.col(c2) = params.refl.col(J[c2]);
  if (k == 0) {
    lc.B_J = Mat(0, d);
    lc.A_J = Mat::Identity(d, d);
  } else {
    const Mat gram = r_lj.transpose() * dm * r_lj;
    Eigen::FullPivLU<Mat> lu(gram);
    if (!lu.isInvertible()) return c;
    lc.B_J = lu.solve(Mat(r_lj.transpose() * dm));
    lc.A_J = Mat::Identity(d, d) - r_lj * lc.B_J;
  }
  const Vec a_theta = lc.A_J * params.theta;
  const Vec a_u = lc.A_J * u;
  const double n_theta = d_norm(dm, a_theta);
  const double n_u = d_norm(dm, a_u);
  if (n_u <= 1e-300) return c;
  lc.alpha = n_theta / n_u;
  const Vec drive = lc.alpha * u - params.theta;

  if (k > 0) {
    lc.lambda = lc.alpha * (lc.B_J * u) - lc.B_J * params.theta;
    if (lc.lambda.minCoeff() <= -kConditionTol) return c;
  } else {
    lc.lambda = Vec(0);
  }
  for (int j : K) {
    if (std::find(J.begin(), J.end(), j) != J.end()) continue;
    const Vec ar = lc.A_J * params.refl.col(j);
    if (d_inner(dm, ar, drive) > kConditionTol) return c;
  }
  lc.cost = std::max(n_theta * n_u - d_inner(dm, a_theta, a_u), 0.0);
  if (k > 0)
    lc.b_K = lc.alpha * u - r_lj * (lc.alpha * (lc.B_J * u)) +
             r_lj * (lc.B_J * params.theta);
  else
    lc.b_K = lc.alpha * u;
  lc.duration = lc.alpha > 0.0 ? 1.0 / lc.alpha
                               : std::numeric_limits<double>::infinity();
  c.passes = true;
  return c;
}

// Subsets of K by ascending size, lexicographic within a size.
std::vector<std::vector<int>> subsets_of(const std::vector<int>& K) {
  std::vector<std::vector<int>> out{{}};
  const int m = static_cast<int>(K.size());
  for (int size = 1; size <= m; ++size) {
    std::vector<int> comb(size);
    for (int i = 0; i < size; ++i) comb[i] = i;
    while (true) {
      std::vector<int> s(size);
      for (int i = 0; i < size; ++i) s[i] = K[comb[i]];
      out.push_back(std::move(s));
      int i = size - 1;
      while (i >= 0 && comb[i] == m - size + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int j = i + 1; j < size; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return out;
}

std::vector<int> normalized(std::vector<int> K) {
  std::sort(K.begin(), K.end());
  K.erase(std::unique(K.begin(), K.end()), K.end());
  return K;
}

}  // namespace

LocalCost local_cost(const ModelParams& params, const std::vector<int>& K_in,
                     const Vec& w, const Vec& v) {
  const std::vector<int> K = normalized(K_in);
  check_pair_condition(K, w, v);
  const Vec u = v - w;
  for (const auto& J : subsets_of(K)) {
    Candidate c = evaluate_subset(params, K, J, u);
    if (c.passes) return std::move(c.lc);
  }
  throw Error(ErrorCode::kNoJStar, "no active subset satisfies the conditions");
}

std::vector<std::vector<int>> local_cost_passing_sets(
    const ModelParams& params, const std::vector<int>& K_in, const Vec& w,
    const Vec& v) {
  const std::vector<int> K = normalized(K_in);
  check_pair_condition(K, w, v);
  const Vec u = v - w;
  std::vector<std::vector<int>> out;
  for (const auto& J : subsets_of(K))
    if (evaluate_subset(params, K, J, u).passes) out.push_back(J);
  return out;
}

double local_cost_direction(const ModelParams& params,
                            const std::vector<int>& K_in, const Vec& u) {
  const std::vector<int> K = normalized(K_in);
  const int d = params.d;
  if (u.size() != d)
    throw Error(ErrorCode::kDimensionMismatch, "direction has wrong dimension");
  if (u.cwiseAbs().maxCoeff() == 0.0)
    throw Error(ErrorCode::kConditionViolated, "direction must be nonzero");
  Vec w = Vec::Zero(d), v = Vec::Zero(d);
  std::vector<bool> in_k(d, false);
  for (int i : K) {
    if (i < 0 || i >= d)
      throw Error(ErrorCode::kConditionViolated, "face index out of range");
    if (u(i) != 0.0)
      throw Error(ErrorCode::kConditionViolated,
                  "direction must vanish on the face coordinates");
    in_k[i] = true;
  }
  for (int j = 0; j < d; ++j) {
    if (in_k[j]) continue;
    if (u(j) > 0.0)
      v(j) = u(j);
    else if (u(j) < 0.0)
      w(j) = -u(j);
    else
      w(j) = v(j) = 1.0;
  }
  return local_cost(params, K, w, v).cost;
}

}  // namespace srbm
