#include "srbm/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <vector>

namespace srbm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotSpd: return "NotSPD";
    case ErrorCode::kNotCompletelyS: return "NotCompletelyS";
    case ErrorCode::kNotMMatrix: return "NotMMatrix";
    case ErrorCode::kDriftNotNegative: return "DriftNotNegative";
    case ErrorCode::kRecurrenceViolated: return "RecurrenceViolated";
    case ErrorCode::kInvalidScenario: return "InvalidScenario";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kNoSolution: return "NoSolution";
    case ErrorCode::kConditionViolated: return "ConditionViolated";
    case ErrorCode::kNoJStar: return "NoJStar";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kDegenerateCost: return "DegenerateCost";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kNonPositiveEstimate: return "NonPositiveEstimate";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

namespace {

constexpr double kMinorTol = 1e-12;
constexpr double kFeasTol = 1e-10;

Mat principal_submatrix(const Mat& m, const std::vector<int>& idx) {
  const int k = static_cast<int>(idx.size());
  Mat g(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) g(i, j) = m(idx[i], idx[j]);
  return g;
}

// Is {v >= 0, G v >= 1} nonempty? The set is pointed, so it is nonempty iff
// it has a vertex; vertices are found by choosing k tight constraints out of
// the 2k available and solving.
bool has_s_vector(const Mat& g) {
  const int k = static_cast<int>(g.rows());
  auto feasible = [&](const Vec& v) {
    if ((v.array() < -kFeasTol).any()) return false;
    return ((g * v).array() >= 1.0 - 1e-9).all();
  };
  auto strictly_positive_image = [&](const Vec& v) {
    return (g * v).minCoeff() > kFeasTol;
  };
  // Cheap candidates first.
  if (strictly_positive_image(Vec::Ones(k))) return true;
  for (int i = 0; i < k; ++i)
    if (strictly_positive_image(Vec::Unit(k, i))) return true;

  std::vector<int> choice(k);
  // choice[i] in [0, 2k): < k means v_c = 0, >= k means (Gv)_{c-k} = 1.
  bool found = false;
  auto recurse = [&](auto&& self, int pos, int start) -> void {
    if (found) return;
    if (pos == k) {
      Mat a(k, k);
      Vec b(k);
      for (int r = 0; r < k; ++r) {
        const int c = choice[r];
        if (c < k) {
          a.row(r) = Vec::Unit(k, c).transpose();
          b(r) = 0.0;
        } else {
          a.row(r) = g.row(c - k);
          b(r) = 1.0;
        }
      }
      Eigen::FullPivLU<Mat> lu(a);
      if (!lu.isInvertible()) return;
      const Vec v = lu.solve(b);
      if (feasible(v)) found = true;
      return;
    }
    for (int c = start; c < 2 * k; ++c) {
      choice[pos] = c;
      self(self, pos + 1, c + 1);
      if (found) return;
    }
  };
  recurse(recurse, 0, 0);
  return found;
}

}  // namespace

bool is_completely_s(const Mat& m) {
  const int d = static_cast<int>(m.rows());
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < d; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    if (!has_s_vector(principal_submatrix(m, idx))) return false;
  }
  return true;
}

bool is_m_matrix(const Mat& m) {
  const int d = static_cast<int>(m.rows());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && m(i, j) > 0.0) return false;
  for (int k = 1; k <= d; ++k) {
    if (m.topLeftCorner(k, k).determinant() <= kMinorTol) return false;
  }
  return true;
}

ModelParams validate(const Vec& theta, const Mat& sigma, const Mat& refl,
                     bool m_matrix_required) {
  const auto d = static_cast<int>(theta.size());
  if (d < 1 || d > kMaxDim)
    throw Error(ErrorCode::kDimensionMismatch,
                "dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (sigma.rows() != d || sigma.cols() != d || refl.rows() != d ||
      refl.cols() != d)
    throw Error(ErrorCode::kDimensionMismatch,
                "theta, sigma and refl dimensions disagree");
  if (!theta.allFinite() || !sigma.allFinite() || !refl.allFinite())
    throw Error(ErrorCode::kValidationError, "non-finite model entries");

  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::kNotSpd, "sigma is not symmetric");
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::kNotSpd, "sigma failed Cholesky factorization");

  ModelParams p;
  p.d = d;
  p.theta = theta;
  p.sigma = sigma;
  p.sigma_chol = llt.matrixL();
  p.sigma_inv = llt.solve(Mat::Identity(d, d));
  p.refl = refl;

  if (!is_completely_s(refl))
    throw Error(ErrorCode::kNotCompletelyS,
                "some principal submatrix of refl admits no v >= 0 with Gv > 0");

  p.m_matrix = is_m_matrix(refl);
  if (m_matrix_required) {
    if (!p.m_matrix)
      throw Error(ErrorCode::kNotMMatrix,
                  "refl is not a nonsingular M-matrix");
    if ((theta.array() >= 0.0).any())
      throw Error(ErrorCode::kDriftNotNegative,
                  "every theta component must be strictly negative");
  }
  return p;
}

Scenario make_scenario(const ModelParams& params, int n, double epsilon,
                       const Vec& start) {
  if (n < 1) throw Error(ErrorCode::kInvalidScenario, "n must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw Error(ErrorCode::kInvalidScenario, "epsilon must lie in (0, 1)");
  if (start.size() != params.d)
    throw Error(ErrorCode::kDimensionMismatch, "start has wrong dimension");
  if ((start.array() < 0.0).any())
    throw Error(ErrorCode::kInvalidScenario, "start must be in the orthant");
  Scenario s{n, epsilon, start};
  const double sum = start.sum();
  if (!(sum > s.a_level() && sum < Scenario::b_level()))
    throw Error(ErrorCode::kInvalidScenario,
                "start must lie strictly outside A_n and B");
  return s;
}

Mat unit_diagonal_refl(const Mat& refl) {
  if (refl.rows() != 2 || refl.cols() != 2)
    throw Error(ErrorCode::kDimensionMismatch, "expected a 2x2 matrix");
  Mat out = refl;
  for (int j = 0; j < 2; ++j) {
    if (refl(j, j) <= 0.0)
      throw Error(ErrorCode::kValidationError,
                  "reflection matrix needs a positive diagonal");
    out.col(j) /= refl(j, j);
  }
  return out;
}

bool check_2d_recurrence(const ModelParams& params) {
  if (params.d != 2)
    throw Error(ErrorCode::kDimensionMismatch, "2-D recurrence test needs d = 2");
  const Mat r = unit_diagonal_refl(params.refl);
  // R = [1 r2; r1 1]
  const double r1 = r(1, 0);
  const double r2 = r(0, 1);
  const double t1 = params.theta(0);
  const double t2 = params.theta(1);
  const double t1_neg = std::max(-t1, 0.0);
  const double t2_neg = std::max(-t2, 0.0);
  return t1 + r2 * t2_neg < 0.0 && t2 + r1 * t1_neg < 0.0;
}

}  // namespace srbm
