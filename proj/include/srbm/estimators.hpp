#pragma once

#include "srbm/model.hpp"
#include "srbm/rng.hpp"
#include "srbm/simulate.hpp"
#include "srbm/subsolution.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace srbm {

struct SplitConfig {
  int split_r = 2;
  double delta = 1.0;
  std::int64_t replications = 1000;
  std::int64_t particle_cap = 1'000'000;
};

// Particle of the RESTART worklist; `count` identical copies share a state.
struct Particle {
  Vec position;
  int level = 0;
  int threshold = 0;
  std::int64_t count = 1;
};

struct EstimateReport {
  double estimate = 0.0;
  std::optional<double> std_error;
  std::array<double, 2> ci95{0.0, 0.0};
  std::int64_t replications = 0;
  std::int64_t timeouts = 0;
  std::int64_t cap_exceeded = 0;
  double particles_mean = 0.0;
  double particles_std = 0.0;
  double particles_max = 0.0;
  double wall_time = 0.0;
  std::optional<double> rel_variance_rate;  // -log(E[s^2]) / n
};

struct Statistics {
  double mean;
  double std_error;
  std::array<double, 2> ci95;
};

// Sample mean, standard error with n - 1 denominator and mean +- 1.96 SE.
Statistics statistics(std::span<const double> samples);

// Least-squares slope of log(estimate) against n.
double decay_rate(std::span<const std::pair<int, double>> points);

// Per-replication outcome shared by all estimators.
struct ReplicationOutcome {
  double value = 0.0;
  std::int64_t particles = 0;
  bool timeout = false;
  bool cap_exceeded = false;
};

struct SplitOnce {
  double s_n = 0.0;
  int start_level = 0;
  std::int64_t particles = 0;    // particles of generations 0 .. l0-1
  std::int64_t b_arrivals = 0;   // generation l0-1 particles entering B
  std::vector<std::int64_t> generation_size;  // N_i, i = 0 .. l0
  std::vector<std::int64_t> reached_next;     // per generation, entries into the next set
  bool timeout = false;
  bool cap_exceeded = false;
};

SplitOnce splitting_once(const Scenario& scenario, const Simulator& sim,
                         const SplitConfig& split, const Subsolution& sub,
                         Rng& rng);

// One up-crossing from region j to k with the threshold histogram of the
// offspring it produced (index alpha - j - 1).
struct Crossing {
  int from = 0;
  int to = 0;
  std::vector<std::int64_t> per_threshold;
};

struct RestartOnce {
  double r_n = 0.0;
  std::int64_t particles = 0;
  std::int64_t b_arrivals = 0;
  std::int64_t killed = 0;
  bool timeout = false;
  bool cap_exceeded = false;
};

// Region index max(0, floor(n (U(z_n) - U(y)) / log r)).
int restart_region(const Subsolution& sub, int split_r, int n, double u_start,
                   const Vec& y);

RestartOnce restart_once(const Scenario& scenario, const Simulator& sim,
                         const SplitConfig& split, const Subsolution& sub,
                         Rng& rng, std::vector<Crossing>* trace = nullptr);

struct RunOptions {
  std::uint64_t seed = 0;
  int threads = 1;
};

EstimateReport standard_mc(const Scenario& scenario, const ModelParams& params,
                           const SimConfig& sim, std::int64_t reps,
                           const RunOptions& opts);

EstimateReport splitting_estimate(const Scenario& scenario,
                                  const ModelParams& params,
                                  const SimConfig& sim, const SplitConfig& split,
                                  const Subsolution& sub, const RunOptions& opts);

EstimateReport restart_estimate(const Scenario& scenario,
                                const ModelParams& params, const SimConfig& sim,
                                const SplitConfig& split, const Subsolution& sub,
                                const RunOptions& opts);

// Aggregates replication outcomes in index order.
EstimateReport summarize(std::span<const ReplicationOutcome> outcomes, int n);

}  // namespace srbm
