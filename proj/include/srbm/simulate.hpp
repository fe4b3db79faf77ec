#pragma once

#include "srbm/model.hpp"
#include "srbm/skorokhod.hpp"

#include <cmath>
#include <concepts>
#include <cstdint>

namespace srbm {

// h is the step on the scaled clock of Z_n (unscaled step = n * h).
struct SimConfig {
  double h = 1e-3;
  std::int64_t max_steps = 100'000'000;
  std::uint64_t rng_seed = 0;
};

enum class Hit { kA, kB, kStopped, kTimeout };

struct PathOutcome {
  Hit hit = Hit::kTimeout;
  Vec exit_point;
  std::int64_t steps = 0;
  double elapsed = 0.0;
};

template <class G>
concept NormalSource = requires(G& g) {
  { g.normal() } -> std::convertible_to<double>;
};

// Euler increment of the scaled driver: theta h + L g sqrt(h / n).
template <NormalSource G>
Vec gaussian_step(const ModelParams& params, double h, int n, G& gen) {
  Vec g(params.d);
  for (int i = 0; i < params.d; ++i) g(i) = gen.normal();
  return params.theta * h +
         params.sigma_chol.template triangularView<Eigen::Lower>() * g *
             std::sqrt(h / n);
}

// Discretized scaled SRBM Z_n: reflection solver and per-step constants are
// built once and reused across all segments of an estimator run.
class Simulator {
 public:
  Simulator(const ModelParams& params, const SimConfig& config, int n)
      : params_(params),
        config_(config),
        n_(n),
        reflector_(params.refl),
        drift_(params.theta * config.h),
        scale_(params.sigma_chol * std::sqrt(config.h / n)) {
    if (!(config.h > 0.0))
      throw Error(ErrorCode::kInvalidConfig, "step h must be positive");
    if (config.max_steps < 1)
      throw Error(ErrorCode::kInvalidConfig, "max_steps must be >= 1");
  }

  const ModelParams& params() const { return params_; }
  const SimConfig& config() const { return config_; }
  int n() const { return n_; }

  template <NormalSource G>
  void step(Vec& z, G& gen) const {
    const int d = params_.d;
    Vec g(d);
    for (int i = 0; i < d; ++i) g(i) = gen.normal();
    z.noalias() += drift_;
    z.noalias() += scale_.template triangularView<Eigen::Lower>() * g;
    reflector_.reflect_in_place(z);
  }

  // Steps from start until stop(z) fires (checked on start too), or the step
  // cap is hit. stop sees every reflected post-step state.
  template <class Stop, NormalSource G>
  PathOutcome run_segment(const Vec& start, Stop&& stop, G& gen) const {
    PathOutcome out;
    Vec z = start;
    std::int64_t k = 0;
    while (true) {
      if (stop(z)) {
        out.hit = Hit::kStopped;
        break;
      }
      if (k >= config_.max_steps) {
        out.hit = Hit::kTimeout;
        break;
      }
      step(z, gen);
      ++k;
    }
    out.exit_point = z;
    out.steps = k;
    out.elapsed = static_cast<double>(k) * config_.h;
    return out;
  }

  template <NormalSource G>
  PathOutcome run_until_stop(const Scenario& scenario, G& gen) const {
    check_start(scenario);
    const double a = scenario.a_level();
    PathOutcome out = run_segment(
        scenario.start,
        [a](const Vec& z) {
          const double s = z.sum();
          return s <= a || s >= Scenario::b_level();
        },
        gen);
    if (out.hit == Hit::kStopped)
      out.hit = Scenario::in_b(out.exit_point) ? Hit::kB : Hit::kA;
    return out;
  }

 private:
  void check_start(const Scenario& scenario) const {
    const double s = scenario.start.sum();
    if (scenario.start.size() != params_.d || !(s > scenario.a_level()) ||
        !(s < Scenario::b_level()))
      throw Error(ErrorCode::kInvalidScenario,
                  "start must lie strictly outside A_n and B");
  }

  ModelParams params_;
  SimConfig config_;
  int n_;
  Reflector reflector_;
  Vec drift_;
  Mat scale_;
};

template <NormalSource G>
PathOutcome run_until_stop(const Scenario& scenario, const ModelParams& params,
                           const SimConfig& config, G& gen) {
  return Simulator(params, config, scenario.n).run_until_stop(scenario, gen);
}

template <class Stop, NormalSource G>
PathOutcome run_segment(const Vec& start, const ModelParams& params,
                        const SimConfig& config, int n, Stop&& stop, G& gen) {
  return Simulator(params, config, n)
      .run_segment(start, std::forward<Stop>(stop), gen);
}

}  // namespace srbm
