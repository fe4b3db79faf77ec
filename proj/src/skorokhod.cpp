#include "srbm/skorokhod.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace srbm {

namespace {

constexpr int kLemkeMaxIter = 1000;

// Subsets of {0..d-1} ordered by size, then lexicographically.
std::vector<std::vector<int>> ordered_subsets(int d) {
  std::vector<std::vector<int>> out;
  for (int k = 1; k <= d; ++k) {
    std::vector<int> comb(k);
    for (int i = 0; i < k; ++i) comb[i] = i;
    while (true) {
      out.push_back(comb);
      int i = k - 1;
      while (i >= 0 && comb[i] == d - k + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return out;
}

void clamp_nonneg(Vec& v) {
  for (int i = 0; i < v.size(); ++i)
    if (v(i) < 0.0) v(i) = 0.0;
}

}  // namespace

Reflector::Reflector(const Mat& refl) : d_(static_cast<int>(refl.rows())), refl_(refl) {
  if (d_ > kEnumerationMaxDim) return;
  for (auto& idx : ordered_subsets(d_)) {
    const int k = static_cast<int>(idx.size());
    Mat sub(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub(i, j) = refl_(idx[i], idx[j]);
    Eigen::FullPivLU<Mat> lu(sub);
    if (!lu.isInvertible()) continue;
    sets_.push_back({std::move(idx), lu.inverse()});
  }
}

ReflectResult Reflector::reflect(const Vec& w) const {
  if (d_ <= kEnumerationMaxDim) return reflect_enumerate(w);
  return reflect_lemke(w);
}

void Reflector::reflect_in_place(Vec& w) const {
  if (w.minCoeff() >= -kTol) {
    clamp_nonneg(w);
    return;
  }
  w = reflect(w).z;
}

ReflectResult Reflector::reflect_enumerate(const Vec& w) const {
  ReflectResult res{w, Vec::Zero(d_)};
  if (w.minCoeff() >= -kTol) {
    clamp_nonneg(res.z);
    return res;
  }
  Vec dy_sub;
  Vec rhs;
  for (const auto& set : sets_) {
    const int k = static_cast<int>(set.idx.size());
    rhs.resize(k);
    for (int i = 0; i < k; ++i) rhs(i) = -w(set.idx[i]);
    dy_sub = set.inv * rhs;
    if (dy_sub.minCoeff() < -kTol) continue;
    Vec z = w;
    for (int i = 0; i < k; ++i) z += refl_.col(set.idx[i]) * dy_sub(i);
    for (int i = 0; i < k; ++i) z(set.idx[i]) = 0.0;
    if (z.minCoeff() < -kTol) continue;
    res.dy.setZero();
    for (int i = 0; i < k; ++i) res.dy(set.idx[i]) = std::max(dy_sub(i), 0.0);
    clamp_nonneg(z);
    res.z = z;
    return res;
  }
  throw Error(ErrorCode::kNoSolution, "no active set yields a complementary pair");
}

// Lemke's complementary pivoting on  z = w + R x,  with covering vector 1.
// Tableau columns: [z (d) | x (d) | x0 | rhs].
ReflectResult Reflector::reflect_lemke(const Vec& w) const {
  const int n = d_;
  ReflectResult res{w, Vec::Zero(n)};
  if (w.minCoeff() >= -kTol) {
    clamp_nonneg(res.z);
    return res;
  }
  Eigen::MatrixXd t(n, 2 * n + 2);
  t.setZero();
  t.block(0, 0, n, n).setIdentity();
  t.block(0, n, n, n) = -refl_;
  t.col(2 * n).setConstant(-1.0);
  t.col(2 * n + 1) = w;
  std::vector<int> basis(n);
  for (int i = 0; i < n; ++i) basis[i] = i;

  // Scalars are copied out first; Eigen takes them by reference.
  auto pivot = [&](int row, int col) {
    const double p = t(row, col);
    t.row(row) /= p;
    for (int i = 0; i < n; ++i) {
      if (i == row) continue;
      const double f = t(i, col);
      if (f != 0.0) t.row(i) -= f * t.row(row);
    }
  };

  const int x0 = 2 * n;
  const int rhs = 2 * n + 1;
  int leave_row = 0;
  t.col(rhs).minCoeff(&leave_row);
  pivot(leave_row, x0);
  int leaving = basis[leave_row];
  basis[leave_row] = x0;

  for (int iter = 0; iter < kLemkeMaxIter; ++iter) {
    const int entering = leaving < n ? leaving + n : leaving - n;
    int row = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (t(i, entering) > 1e-12) {
        const double ratio = t(i, rhs) / t(i, entering);
        const bool tie = row >= 0 && std::abs(ratio - best) <= 1e-12 * (1.0 + std::abs(best));
        if (ratio < best && !tie) {
          best = ratio;
          row = i;
        } else if (tie && basis[i] == x0) {
          row = i;
        }
      }
    }
    if (row < 0) break;
    pivot(row, entering);
    leaving = basis[row];
    basis[row] = entering;
    if (leaving == x0) {
      for (int i = 0; i < n; ++i)
        if (basis[i] >= n && basis[i] < 2 * n)
          res.dy(basis[i] - n) = std::max(t(i, rhs), 0.0);
      res.z = w + refl_ * res.dy;
      for (int i = 0; i < n; ++i)
        if (res.dy(i) > 0.0) res.z(i) = 0.0;
      if (res.z.minCoeff() < -1e-9)
        throw Error(ErrorCode::kNoSolution, "complementary pivoting broke down");
      clamp_nonneg(res.z);
      return res;
    }
  }
  throw Error(ErrorCode::kNoSolution, "complementary pivoting did not terminate");
}

ReflectResult reflect_step(const Vec& w, const ModelParams& params) {
  if (w.size() != params.d)
    throw Error(ErrorCode::kDimensionMismatch, "point has wrong dimension");
  return Reflector(params.refl).reflect(w);
}

namespace {

// Dense Gaussian elimination with partial pivoting; false when singular.
bool gauss_solve(std::vector<double> a, std::vector<double> b, int k,
                 std::vector<double>& x) {
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r)
      if (std::abs(a[r * k + col]) > std::abs(a[piv * k + col])) piv = r;
    if (std::abs(a[piv * k + col]) < 1e-14) return false;
    if (piv != col) {
      for (int c = 0; c < k; ++c) std::swap(a[piv * k + c], a[col * k + c]);
      std::swap(b[piv], b[col]);
    }
    for (int r = col + 1; r < k; ++r) {
      const double f = a[r * k + col] / a[col * k + col];
      for (int c = col; c < k; ++c) a[r * k + c] -= f * a[col * k + c];
      b[r] -= f * b[col];
    }
  }
  x.assign(k, 0.0);
  for (int r = k - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < k; ++c) s -= a[r * k + c] * x[c];
    x[r] = s / a[r * k + r];
  }
  return true;
}

}  // namespace

ReflectResult reflect_step_oracle(const Vec& w, const ModelParams& params) {
  const int d = params.d;
  if (d > kMaxDim)
    throw Error(ErrorCode::kDimensionMismatch, "oracle limited to d <= 8");
  const double tol = Reflector::kTol;
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < d; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const int k = static_cast<int>(idx.size());
    std::vector<double> x;
    if (k > 0) {
      std::vector<double> a(k * k), b(k);
      for (int r = 0; r < k; ++r) {
        b[r] = -w(idx[r]);
        for (int c = 0; c < k; ++c) a[r * k + c] = params.refl(idx[r], idx[c]);
      }
      if (!gauss_solve(a, b, k, x)) continue;
    }
    bool ok = true;
    Vec dy = Vec::Zero(d);
    for (int r = 0; r < k; ++r) {
      if (x[r] < -tol) ok = false;
      dy(idx[r]) = std::max(x[r], 0.0);
    }
    if (!ok) continue;
    Vec z(d);
    for (int i = 0; i < d; ++i) {
      double s = w(i);
      for (int r = 0; r < k; ++r) s += params.refl(i, idx[r]) * x[r];
      z(i) = s;
    }
    for (int r = 0; r < k; ++r) z(idx[r]) = 0.0;
    for (int i = 0; i < d; ++i) {
      if (z(i) < -tol) ok = false;
      z(i) = std::max(z(i), 0.0);
    }
    if (ok) return {z, dy};
  }
  throw Error(ErrorCode::kNoSolution, "oracle found no complementary pair");
}

RegulatedPath regulate_path(const std::vector<Vec>& driver,
                            const ModelParams& params) {
  RegulatedPath out;
  if (driver.empty()) return out;
  if (driver[0].minCoeff() < 0.0)
    throw Error(ErrorCode::kInvalidScenario, "driver must start in the orthant");
  const Reflector reflector(params.refl);
  out.phi.reserve(driver.size());
  out.eta.reserve(driver.size());
  out.phi.push_back(driver[0]);
  out.eta.push_back(Vec::Zero(params.d));
  for (std::size_t k = 1; k < driver.size(); ++k) {
    const Vec w = out.phi.back() + (driver[k] - driver[k - 1]);
    ReflectResult step = reflector.reflect(w);
    out.phi.push_back(step.z);
    out.eta.push_back(out.eta.back() + step.dy);
  }
  return out;
}

}  // namespace srbm
