#include "srbm/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace srbm {

Statistics statistics(std::span<const double> samples) {
  if (samples.size() < 2)
    throw Error(ErrorCode::kInsufficientSamples,
                "need at least two samples for a standard error");
  const auto count = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double mean = sum / count;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
  return {mean, se, {mean - 1.96 * se, mean + 1.96 * se}};
}

double decay_rate(std::span<const std::pair<int, double>> points) {
  std::vector<double> xs, ys;
  for (const auto& [n, est] : points) {
    if (!(est > 0.0))
      throw Error(ErrorCode::kNonPositiveEstimate,
                  "decay rate needs positive estimates");
    xs.push_back(n);
    ys.push_back(std::log(est));
  }
  const std::size_t m = xs.size();
  if (m < 2)
    throw Error(ErrorCode::kInsufficientSamples, "need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx <= 0.0)
    throw Error(ErrorCode::kInsufficientSamples, "need two distinct n values");
  return sxy / sxx;
}

EstimateReport summarize(std::span<const ReplicationOutcome> outcomes, int n) {
  EstimateReport rep;
  rep.replications = static_cast<std::int64_t>(outcomes.size());
  if (outcomes.empty()) return rep;
  std::vector<double> values;
  values.reserve(outcomes.size());
  double sq = 0.0, psum = 0.0, pmax = 0.0;
  for (const auto& o : outcomes) {
    values.push_back(o.value);
    sq += o.value * o.value;
    psum += static_cast<double>(o.particles);
    pmax = std::max(pmax, static_cast<double>(o.particles));
    if (o.timeout) ++rep.timeouts;
    if (o.cap_exceeded) ++rep.cap_exceeded;
  }
  const auto count = static_cast<double>(outcomes.size());
  if (outcomes.size() >= 2) {
    const Statistics s = statistics(values);
    rep.estimate = s.mean;
    rep.std_error = s.std_error;
    rep.ci95 = {std::clamp(s.ci95[0], 0.0, 1.0), std::clamp(s.ci95[1], 0.0, 1.0)};
  } else {
    rep.estimate = values[0];
    rep.ci95 = {values[0], values[0]};
  }
  rep.particles_mean = psum / count;
  if (outcomes.size() >= 2) {
    double pss = 0.0;
    for (const auto& o : outcomes) {
      const double dp = static_cast<double>(o.particles) - rep.particles_mean;
      pss += dp * dp;
    }
    rep.particles_std = std::sqrt(pss / (count - 1.0));
  }
  rep.particles_max = pmax;
  const double second_moment = sq / count;
  if (second_moment > 0.0) rep.rel_variance_rate = -std::log(second_moment) / n;
  return rep;
}

namespace {

// Runs body(i) for every replication index; outputs land at index i, so the
// reduction never depends on scheduling.
template <class Body>
std::vector<ReplicationOutcome> fan_out(std::int64_t reps, int threads, Body&& body) {
  std::vector<ReplicationOutcome> out(static_cast<std::size_t>(reps));
  const int workers = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(threads, reps)));
  if (workers == 1) {
    for (std::int64_t i = 0; i < reps; ++i) out[i] = body(i);
    return out;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&]() {
    try {
      while (!failed.load()) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= reps) break;
        out[i] = body(i);
      }
    } catch (...) {
      bool expected = false;
      if (failed.compare_exchange_strong(expected, true))
        failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

template <class Body>
EstimateReport run_replications(std::int64_t reps, int n, const RunOptions& opts,
                                Body&& body) {
  if (reps < 1)
    throw Error(ErrorCode::kInvalidConfig, "replications must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const auto outcomes = fan_out(reps, opts.threads, std::forward<Body>(body));
  EstimateReport rep = summarize(outcomes, n);
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

double int_pow(int base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

void check_split_config(const SplitConfig& split) {
  if (split.split_r < 2)
    throw Error(ErrorCode::kInvalidConfig, "split_r must be >= 2");
  if (!(split.delta > 0.0 && split.delta <= 1.0))
    throw Error(ErrorCode::kInvalidConfig, "delta must lie in (0, 1]");
  if (split.particle_cap < 1)
    throw Error(ErrorCode::kInvalidConfig, "particle_cap must be >= 1");
}

}  // namespace

SplitOnce splitting_once(const Scenario& scenario, const Simulator& sim,
                         const SplitConfig& split, const Subsolution& sub,
                         Rng& rng) {
  check_split_config(split);
  const int r = split.split_r;
  const int n = scenario.n;
  const double a = scenario.a_level();
  SplitOnce res;
  const int l0 = level_index(sub, split.delta, r, n, scenario.start);
  res.start_level = l0;
  res.generation_size.assign(l0 + 1, 0);
  res.reached_next.assign(l0 + 1, 0);
  res.generation_size[0] = 1;
  if (l0 == 0) {
    res.s_n = 1.0;
    res.particles = 1;
    return res;
  }

  struct Entry {
    Vec position;
    int generation;
    std::int64_t count;
  };
  std::vector<Entry> stack;
  stack.push_back({scenario.start, 0, 1});
  std::int64_t used = 1;

  while (!stack.empty()) {
    Entry& top = stack.back();
    const Vec pos = top.position;
    const int g = top.generation;
    if (--top.count == 0) stack.pop_back();

    const int target = l0 - g - 1;
    const PathOutcome seg = sim.run_segment(
        pos,
        [&](const Vec& z) {
          if (z.sum() <= a) return true;
          return level_index(sub, split.delta, r, n, z) <= target;
        },
        rng);
    if (seg.hit == Hit::kTimeout) {
      res.timeout = true;
      continue;
    }
    const Vec& y = seg.exit_point;
    if (y.sum() <= a) continue;  // absorbed in A_n
    ++res.reached_next[g];

    if (Scenario::in_b(y)) {
      if (g == l0 - 1) ++res.b_arrivals;
      // Every descendant already sits in B: generations g+1 .. l0 fill up
      // without further simulation.
      double mult = 1.0;
      for (int h = g + 1; h <= l0; ++h) {
        mult *= r;
        res.generation_size[h] += static_cast<std::int64_t>(mult);
        if (h < l0) {
          res.reached_next[h] += static_cast<std::int64_t>(mult);
          used += static_cast<std::int64_t>(mult);
        }
      }
    } else {
      res.generation_size[g + 1] += r;
      used += r;
      stack.push_back({y, g + 1, r});
    }
    if (used > split.particle_cap) {
      res.cap_exceeded = true;
      break;
    }
  }
  res.particles = used;
  if (res.timeout || res.cap_exceeded) {
    res.s_n = 0.0;
    return res;
  }
  res.s_n = static_cast<double>(res.generation_size[l0]) / int_pow(r, l0);
  return res;
}

int restart_region(const Subsolution& sub, int split_r, int n, double u_start,
                   const Vec& y) {
  const double x = n * (u_start - tbar(sub, y)) / std::log(static_cast<double>(split_r));
  if (x <= 0.0) return 0;
  return static_cast<int>(std::floor(x));
}

RestartOnce restart_once(const Scenario& scenario, const Simulator& sim,
                         const SplitConfig& split, const Subsolution& sub,
                         Rng& rng, std::vector<Crossing>* trace) {
  check_split_config(split);
  const int r = split.split_r;
  const int n = scenario.n;
  const double a = scenario.a_level();
  const double u_start = tbar(sub, scenario.start);
  const std::int64_t max_steps = sim.config().max_steps;

  RestartOnce res;
  std::vector<Particle> stack;
  stack.push_back({scenario.start, 0, 0, 1});
  res.particles = 1;
  double total = 0.0;

  while (!stack.empty()) {
    Particle& top = stack.back();
    Vec z = top.position;
    int j = top.level;
    const int threshold = top.threshold;
    if (--top.count == 0) stack.pop_back();

    std::int64_t steps = 0;
    while (true) {
      if (steps >= max_steps) {
        res.timeout = true;
        break;
      }
      sim.step(z, rng);
      ++steps;
      const int k = restart_region(sub, r, n, u_start, z);
      if (k < threshold) {
        ++res.killed;
        break;
      }
      const double s = z.sum();
      const bool stopped = s <= a || s >= Scenario::b_level();
      std::int64_t spawned = 0;
      if (k > j) {
        const double total_off = int_pow(r, k - j) - 1.0;
        if (res.particles + total_off > static_cast<double>(split.particle_cap)) {
          res.cap_exceeded = true;
          break;
        }
        spawned = static_cast<std::int64_t>(total_off);
        res.particles += spawned;
        Crossing c{j, k, {}};
        for (int alpha = j + 1; alpha <= k; ++alpha) {
          const auto m = static_cast<std::int64_t>((r - 1) * int_pow(r, alpha - j - 1));
          if (trace) c.per_threshold.push_back(m);
          // Offspring born inside A_n or B stop on the spot.
          if (!stopped) stack.push_back({z, k, alpha, m});
        }
        if (trace) trace->push_back(std::move(c));
      }
      if (stopped) {
        if (s >= Scenario::b_level()) {
          const std::int64_t arrivals = 1 + spawned;
          res.b_arrivals += arrivals;
          total += static_cast<double>(arrivals) / int_pow(r, k);
        }
        break;
      }
      j = k;
    }
    if (res.cap_exceeded) break;
  }
  res.r_n = (res.timeout || res.cap_exceeded) ? 0.0 : total;
  return res;
}

EstimateReport standard_mc(const Scenario& scenario, const ModelParams& params,
                           const SimConfig& sim_config, std::int64_t reps,
                           const RunOptions& opts) {
  const Simulator sim(params, sim_config, scenario.n);
  return run_replications(reps, scenario.n, opts, [&](std::int64_t i) {
    Rng rng = Rng::for_stream(opts.seed, static_cast<std::uint64_t>(i));
    const PathOutcome out = sim.run_until_stop(scenario, rng);
    ReplicationOutcome o;
    o.particles = 1;
    o.timeout = out.hit == Hit::kTimeout;
    o.value = out.hit == Hit::kB ? 1.0 : 0.0;
    return o;
  });
}

EstimateReport splitting_estimate(const Scenario& scenario,
                                  const ModelParams& params,
                                  const SimConfig& sim_config,
                                  const SplitConfig& split,
                                  const Subsolution& sub, const RunOptions& opts) {
  check_split_config(split);
  const Simulator sim(params, sim_config, scenario.n);
  return run_replications(split.replications, scenario.n, opts, [&](std::int64_t i) {
    Rng rng = Rng::for_stream(opts.seed, static_cast<std::uint64_t>(i));
    const SplitOnce s = splitting_once(scenario, sim, split, sub, rng);
    return ReplicationOutcome{s.s_n, s.particles, s.timeout, s.cap_exceeded};
  });
}

EstimateReport restart_estimate(const Scenario& scenario,
                                const ModelParams& params,
                                const SimConfig& sim_config,
                                const SplitConfig& split, const Subsolution& sub,
                                const RunOptions& opts) {
  check_split_config(split);
  const Simulator sim(params, sim_config, scenario.n);
  return run_replications(split.replications, scenario.n, opts, [&](std::int64_t i) {
    Rng rng = Rng::for_stream(opts.seed, static_cast<std::uint64_t>(i));
    const RestartOnce s = restart_once(scenario, sim, split, sub, rng);
    return ReplicationOutcome{s.r_n, s.particles, s.timeout, s.cap_exceeded};
  });
}

}  // namespace srbm
