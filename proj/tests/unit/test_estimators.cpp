#include "srbm/estimators.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace srbm;
using srbm::testing::model_2d;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

Scenario ref_scenario(const ModelParams& p, int n) {
  return make_scenario(p, n, 0.15, vec2(0.1, 0.1) / n);
}

SimConfig ref_sim(int n) {
  SimConfig c;
  c.h = 1.0 / (1000.0 * n);
  return c;
}

}  // namespace

TEST_CASE("statistics examples") {
  const std::vector<double> xs{0, 0, 1, 1};
  const Statistics s = statistics(xs);
  CHECK(s.mean == 0.5);
  CHECK(s.std_error == doctest::Approx(std::sqrt(1.0 / 3.0) / 2.0));
  CHECK(s.std_error == doctest::Approx(0.2887).epsilon(1e-3));
  CHECK(s.ci95[0] == doctest::Approx(-0.0659).epsilon(1e-2));
  CHECK(s.ci95[1] == doctest::Approx(1.0659).epsilon(1e-3));

  const std::vector<double> flat{0.3, 0.3, 0.3};
  CHECK(statistics(flat).std_error == 0.0);

  const std::vector<double> one{0.4};
  try {
    statistics(one);
    FAIL("expected InsufficientSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientSamples);
  }

  // Probability intervals are clamped to [0, 1] in reports.
  std::vector<ReplicationOutcome> outs;
  for (double x : xs) outs.push_back({x, 1, false, false});
  const EstimateReport rep = summarize(outs, 1);
  CHECK(rep.ci95[0] == 0.0);
  CHECK(rep.ci95[1] == 1.0);
  CHECK(rep.particles_max >= rep.particles_mean);

  const EstimateReport single = summarize(std::vector<ReplicationOutcome>{{0.25, 3, false, false}}, 1);
  CHECK(single.estimate == 0.25);
  CHECK_FALSE(single.std_error.has_value());
}

TEST_CASE("decay rate examples") {
  const std::vector<std::pair<int, double>> two{{10, 5.55e-6}, {15, 3.8e-8}};
  const double want = (std::log(3.8e-8) - std::log(5.55e-6)) / 5.0;
  CHECK(decay_rate(two) == doctest::Approx(want).epsilon(1e-12));
  CHECK(decay_rate(two) == doctest::Approx(-0.995).epsilon(2e-3));

  const std::vector<std::pair<int, double>> restart{
      {15, 3.796e-8}, {20, 2.611e-10}, {30, 1.132e-14}, {40, 3.146e-19}};
  CHECK(decay_rate(restart) == doctest::Approx(-1.02).epsilon(1e-2));

  // Exact exponential recovers its rate.
  std::vector<std::pair<int, double>> exact;
  for (int n = 1; n <= 6; ++n) exact.push_back({n, 3.0 * std::exp(-0.7 * n)});
  CHECK(decay_rate(exact) == doctest::Approx(-0.7).epsilon(1e-12));

  const std::vector<std::pair<int, double>> zero{{5, 1e-3}, {10, 0.0}};
  CHECK_THROWS_AS(decay_rate(zero), Error);
  const std::vector<std::pair<int, double>> same{{5, 1e-3}, {5, 2e-3}};
  CHECK_THROWS_AS(decay_rate(same), Error);
}

TEST_CASE("standard Monte Carlo sanity directions") {
  Vec down(2);
  down << -40.0, -40.0;
  const ModelParams pd = validate(down, Mat::Identity(2, 2), Mat::Identity(2, 2), false);
  const Scenario sd = make_scenario(pd, 1, 0.15, vec2(0.1, 0.1));
  const EstimateReport a = standard_mc(sd, pd, SimConfig{}, 200, {1, 1});
  CHECK(a.estimate == 0.0);

  Vec up(2);
  up << 40.0, 40.0;
  const ModelParams pu = validate(up, Mat::Identity(2, 2), Mat::Identity(2, 2), false);
  const Scenario su = make_scenario(pu, 1, 0.15, vec2(0.45, 0.45));
  const EstimateReport b = standard_mc(su, pu, SimConfig{}, 200, {1, 1});
  CHECK(b.estimate == 1.0);
  CHECK(b.ci95[0] <= b.estimate);
  CHECK(b.ci95[1] >= b.estimate);
}

TEST_CASE("splitting accounting balances") {
  const ModelParams p = model_2d();
  const Subsolution sub = make_exact_2d(p);
  for (int n : {2, 5}) {
    const Scenario s = ref_scenario(p, n);
    const Simulator sim(p, ref_sim(n), n);
    for (int r : {2, 3}) {
      SplitConfig sc;
      sc.split_r = r;
      int nonzero = 0;
      for (int i = 0; i < 400; ++i) {
        Rng rng = Rng::for_stream(7, i);
        const SplitOnce so = splitting_once(s, sim, sc, sub, rng);
        const int l0 = so.start_level;
        REQUIRE(l0 == level_index(sub, 1.0, r, n, s.start));
        CHECK(so.generation_size[0] == 1);
        std::int64_t used = 0;
        for (int g = 0; g < l0; ++g) {
          CHECK(so.generation_size[g + 1] == r * so.reached_next[g]);
          CHECK(so.reached_next[g] <= so.generation_size[g]);
          used += so.generation_size[g];
        }
        CHECK(so.particles == used);
        CHECK(so.s_n * static_cast<double>(ipow(r, l0)) ==
              doctest::Approx(static_cast<double>(so.generation_size[l0])));
        CHECK(so.generation_size[l0] >= r * so.b_arrivals);
        if (so.s_n > 0.0) ++nonzero;
      }
      if (n == 2) CHECK(nonzero > 0);
    }
  }
}

TEST_CASE("splitting from level one reduces to a hit indicator") {
  const ModelParams p = model_2d();
  const Subsolution sub = make_exact_2d(p);
  const Scenario s = make_scenario(p, 1, 0.15, vec2(0.9, 0.0));
  REQUIRE(level_index(sub, 1.0, 2, 1, s.start) == 1);
  const Simulator sim(p, ref_sim(1), 1);
  for (int i = 0; i < 100; ++i) {
    Rng rng = Rng::for_stream(3, i);
    const SplitOnce so = splitting_once(s, sim, SplitConfig{}, sub, rng);
    CHECK((so.s_n == 0.0 || so.s_n == 1.0));
    CHECK(so.particles == 1);
  }
}

TEST_CASE("RESTART offspring follow the threshold law") {
  const ModelParams p = model_2d();
  const Subsolution sub = make_exact_2d(p);
  for (int r : {2, 3}) {
    SplitConfig sc;
    sc.split_r = r;
    const int n = 5;
    const Scenario s = ref_scenario(p, n);
    const Simulator sim(p, ref_sim(n), n);
    std::int64_t crossings = 0;
    bool multi = false;
    for (int i = 0; i < 300; ++i) {
      Rng rng = Rng::for_stream(11, i);
      std::vector<Crossing> trace;
      const RestartOnce ro = restart_once(s, sim, sc, sub, rng, &trace);
      std::int64_t spawned = 0;
      for (const Crossing& c : trace) {
        REQUIRE(c.to > c.from);
        REQUIRE(static_cast<int>(c.per_threshold.size()) == c.to - c.from);
        std::int64_t total = 0;
        for (int alpha = c.from + 1; alpha <= c.to; ++alpha) {
          CHECK(c.per_threshold[alpha - c.from - 1] == (r - 1) * ipow(r, alpha - c.from - 1));
          total += c.per_threshold[alpha - c.from - 1];
        }
        CHECK(total == ipow(r, c.to - c.from) - 1);
        spawned += total;
        multi = multi || c.to - c.from > 1;
        ++crossings;
      }
      CHECK(ro.particles == 1 + spawned);
    }
    CHECK(crossings > 0);
    (void)multi;
  }
}

TEST_CASE("RESTART threshold histogram examples") {
  // r = 2, 0 -> 2: 1 offspring with threshold 1, 2 with threshold 2.
  // r = 3, 0 -> 2: 2 with threshold 1, 6 with threshold 2.
  auto hist = [](int r, int j, int k) {
    std::vector<std::int64_t> h;
    for (int alpha = j + 1; alpha <= k; ++alpha) h.push_back((r - 1) * ipow(r, alpha - j - 1));
    return h;
  };
  CHECK(hist(2, 0, 2) == std::vector<std::int64_t>{1, 2});
  CHECK(hist(3, 0, 2) == std::vector<std::int64_t>{2, 6});
}

TEST_CASE("RESTART without splits is the plain hit indicator") {
  Vec up(2);
  up << 1.0, 1.0;
  const ModelParams p = validate(up, Mat::Identity(2, 2), Mat::Identity(2, 2), false);
  const Subsolution sub = make_scaled_l1(1.0);
  SplitConfig sc;
  sc.split_r = 1000000;  // one region spans more than the whole range of n U
  const Scenario s = make_scenario(p, 1, 0.15, vec2(0.3, 0.3));
  const Simulator sim(p, SimConfig{}, 1);
  int hits = 0;
  for (int i = 0; i < 200; ++i) {
    Rng a = Rng::for_stream(5, i), b = Rng::for_stream(5, i);
    std::vector<Crossing> trace;
    const RestartOnce ro = restart_once(s, sim, sc, sub, a, &trace);
    const PathOutcome mc = sim.run_until_stop(s, b);
    CHECK(trace.empty());
    CHECK(ro.r_n == (mc.hit == Hit::kB ? 1.0 : 0.0));
    hits += mc.hit == Hit::kB;
  }
  CHECK(hits > 0);
}

TEST_CASE("particle cap and step cap invalidate replications") {
  const ModelParams p = model_2d();
  const Subsolution sub = make_exact_2d(p);
  const Scenario s = ref_scenario(p, 2);
  SplitConfig sc;
  sc.particle_cap = 1;
  sc.replications = 300;
  const EstimateReport rs = restart_estimate(s, p, ref_sim(2), sc, sub, {9, 1});
  CHECK(rs.cap_exceeded > 0);
  const EstimateReport ss = splitting_estimate(s, p, ref_sim(2), sc, sub, {9, 1});
  CHECK(ss.cap_exceeded > 0);

  SimConfig tiny = ref_sim(2);
  tiny.max_steps = 1;
  const EstimateReport mc = standard_mc(s, p, tiny, 50, {9, 1});
  CHECK(mc.timeouts >= 40);  // a single step can still land in A_n
  CHECK(mc.estimate == 0.0);

  SplitConfig bad;
  bad.split_r = 1;
  CHECK_THROWS_AS(splitting_estimate(s, p, ref_sim(2), bad, sub, {1, 1}), Error);
}

TEST_CASE("estimators agree with Monte Carlo at small n") {
  const ModelParams p = model_2d();
  const Subsolution sub = make_exact_2d(p);
  const int n = 2;
  const Scenario s = ref_scenario(p, n);
  SplitConfig sc;
  sc.replications = 3000;
  const EstimateReport mc = standard_mc(s, p, ref_sim(n), 30000, {101, 1});
  const EstimateReport sp = splitting_estimate(s, p, ref_sim(n), sc, sub, {102, 1});
  const EstimateReport rs = restart_estimate(s, p, ref_sim(n), sc, sub, {103, 1});
  auto close = [](const EstimateReport& a, const EstimateReport& b) {
    const double se = std::hypot(*a.std_error, *b.std_error);
    return std::abs(a.estimate - b.estimate) <= 4.0 * se;
  };
  CHECK(close(mc, sp));
  CHECK(close(mc, rs));
  CHECK(close(sp, rs));
}

TEST_CASE("reports do not depend on the thread count") {
  const ModelParams p = model_2d();
  const Subsolution sub = make_exact_2d(p);
  const Scenario s = ref_scenario(p, 5);
  SplitConfig sc;
  sc.replications = 400;
  for (int alg = 0; alg < 3; ++alg) {
    std::vector<EstimateReport> reps;
    for (int threads : {1, 2, 5}) {
      const RunOptions opts{77, threads};
      if (alg == 0)
        reps.push_back(standard_mc(s, p, ref_sim(5), 2000, opts));
      else if (alg == 1)
        reps.push_back(splitting_estimate(s, p, ref_sim(5), sc, sub, opts));
      else
        reps.push_back(restart_estimate(s, p, ref_sim(5), sc, sub, opts));
    }
    for (std::size_t k = 1; k < reps.size(); ++k) {
      CHECK(reps[k].estimate == reps[0].estimate);
      CHECK(reps[k].std_error == reps[0].std_error);
      CHECK(reps[k].particles_mean == reps[0].particles_mean);
      CHECK(reps[k].particles_std == reps[0].particles_std);
      CHECK(reps[k].particles_max == reps[0].particles_max);
    }
  }
}
