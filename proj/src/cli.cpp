#include "srbm/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace srbm {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kParseError, field + ": " + what);
}

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kValidationError, field + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : obj.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) parse_fail(path.empty() ? key : path + "." + key, "unknown field");
  }
}

const json& object_at(const json& parent, const std::string& key,
                      const std::string& path) {
  if (!parent.contains(key)) invalid(path, "missing block");
  const json& j = parent.at(key);
  if (!j.is_object()) parse_fail(path, "expected an object");
  return j;
}

// Reads obj[key] into out. Absent keys keep the default unless required.
template <class T>
void read(const json& obj, const std::string& key, const std::string& path,
          T& out, bool required = false) {
  const std::string field = path + "." + key;
  if (!obj.contains(key)) {
    if (required) invalid(field, "missing required field");
    return;
  }
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    parse_fail(field, std::string("wrong type (") + e.what() + ")");
  }
}

template <class T>
void read_integral(const json& obj, const std::string& key, const std::string& path,
                   T& out) {
  const std::string field = path + "." + key;
  if (!obj.contains(key)) return;
  const json& j = obj.at(key);
  if (j.is_number_integer()) {
    out = j.get<T>();
  } else if (j.is_number_float() && std::floor(j.get<double>()) == j.get<double>() &&
             std::abs(j.get<double>()) < 9.2e18) {
    out = static_cast<T>(j.get<double>());  // allows 1e8 style literals
  } else {
    parse_fail(field, "expected an integer");
  }
}

void check_choice(const std::string& field, const std::string& value,
                  std::initializer_list<std::string_view> valid) {
  std::string names;
  for (auto v : valid) {
    if (value == v) return;
    if (!names.empty()) names += ", ";
    names += v;
  }
  parse_fail(field, "unknown value '" + value + "'; valid names: " + names);
}

Mat to_mat(const std::vector<std::vector<double>>& rows, int d,
           const std::string& field) {
  if (static_cast<int>(rows.size()) != d) invalid(field, "expected " + std::to_string(d) + " rows");
  Mat m(d, d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(rows[i].size()) != d)
      invalid(field, "row " + std::to_string(i) + " has wrong length");
    for (int j = 0; j < d; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

void validate_config(const RunConfig& c) {
  const int d = static_cast<int>(c.model.theta.size());
  if (d < 1 || d > kMaxDim)
    invalid("model.theta", "dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  const ModelParams params = build_params(c);

  const auto& s = c.scenario;
  if (!(s.epsilon > 0.0 && s.epsilon < 1.0)) invalid("scenario.epsilon", "must lie in (0, 1)");
  if (static_cast<int>(s.start.size()) != d)
    invalid("scenario.start", "dimension differs from model.theta");
  for (double x : s.start)
    if (!(x >= 0.0)) invalid("scenario.start", "coordinates must be nonnegative");
  if (s.n.empty()) invalid("scenario.n", "list must be nonempty");
  for (int n : s.n) {
    if (n < 1) invalid("scenario.n", "entries must be >= 1");
    const double h = c.step(n);
    if (!(h > 0.0) || !std::isfinite(h)) invalid("algorithm.step", "h(n) must be positive");
    const Vec z = c.start_point(n);
    if (!(z.sum() > s.epsilon / n && z.sum() < 1.0))
      invalid("scenario.start",
              "start must lie strictly between A_n and B for n = " + std::to_string(n));
  }

  const auto& a = c.algorithm;
  if (a.split_r < 2) invalid("algorithm.split_r", "must be >= 2");
  if (!(a.delta > 0.0 && a.delta <= 1.0)) invalid("algorithm.delta", "must lie in (0, 1]");
  if (a.replications < 1) invalid("algorithm.replications", "must be >= 1");
  if (!(a.step_coefficient > 0.0)) invalid("algorithm.step.coefficient", "must be positive");
  if (a.max_steps < 1) invalid("algorithm.max_steps", "must be >= 1");
  if (a.particle_cap < 1) invalid("algorithm.particle_cap", "must be >= 1");
  if (a.subsolution == "exact2d" && d != 2)
    invalid("algorithm.subsolution", "exact2d needs a two-dimensional model");
  if (a.r_resolution < 2) invalid("algorithm.r_resolution", "must be >= 2");
  if (a.r_refine_iters < 0) invalid("algorithm.r_refine_iters", "must be >= 0");
  (void)params;
}

}  // namespace

double RunConfig::step(int n) const {
  return 1.0 / (algorithm.step_coefficient * std::pow(static_cast<double>(n),
                                                      algorithm.step_power));
}

Vec RunConfig::start_point(int n) const {
  Vec z = to_vec(scenario.start);
  if (scenario.start_units == "unscaled") z /= n;
  return z;
}

ModelParams build_params(const RunConfig& c) {
  const int d = static_cast<int>(c.model.theta.size());
  return validate(to_vec(c.model.theta), to_mat(c.model.sigma, d, "model.sigma"),
                  to_mat(c.model.refl, d, "model.refl"), c.model.m_matrix);
}

RunConfig config_from_json(const json& root) {
  if (!root.is_object()) parse_fail("<root>", "expected an object");
  reject_unknown(root, "", {"model", "scenario", "algorithm", "seed", "output"});
  RunConfig c;

  const json& m = object_at(root, "model", "model");
  reject_unknown(m, "model", {"theta", "sigma", "refl", "m_matrix"});
  read(m, "theta", "model", c.model.theta, true);
  read(m, "sigma", "model", c.model.sigma, true);
  read(m, "refl", "model", c.model.refl, true);
  read(m, "m_matrix", "model", c.model.m_matrix);

  const json& s = object_at(root, "scenario", "scenario");
  reject_unknown(s, "scenario", {"epsilon", "start", "start_units", "n"});
  read(s, "epsilon", "scenario", c.scenario.epsilon);
  read(s, "start", "scenario", c.scenario.start, true);
  read(s, "start_units", "scenario", c.scenario.start_units);
  check_choice("scenario.start_units", c.scenario.start_units, {"scaled", "unscaled"});
  read(s, "n", "scenario", c.scenario.n, true);

  if (root.contains("algorithm")) {
    const json& a = object_at(root, "algorithm", "algorithm");
    reject_unknown(a, "algorithm",
                   {"name", "split_r", "delta", "replications", "step", "max_steps",
                    "particle_cap", "subsolution", "r_resolution", "r_refine_iters"});
    auto& al = c.algorithm;
    read(a, "name", "algorithm", al.name);
    check_choice("algorithm.name", al.name, {"mc", "split", "restart"});
    read_integral(a, "split_r", "algorithm", al.split_r);
    read(a, "delta", "algorithm", al.delta);
    read_integral(a, "replications", "algorithm", al.replications);
    if (a.contains("step")) {
      const json& st = object_at(a, "step", "algorithm.step");
      reject_unknown(st, "algorithm.step", {"coefficient", "power"});
      read(st, "coefficient", "algorithm.step", al.step_coefficient);
      read(st, "power", "algorithm.step", al.step_power);
    }
    read_integral(a, "max_steps", "algorithm", al.max_steps);
    read_integral(a, "particle_cap", "algorithm", al.particle_cap);
    read(a, "subsolution", "algorithm", al.subsolution);
    check_choice("algorithm.subsolution", al.subsolution, {"auto", "exact2d", "scaled_l1"});
    read_integral(a, "r_resolution", "algorithm", al.r_resolution);
    read_integral(a, "r_refine_iters", "algorithm", al.r_refine_iters);
  }

  read_integral(root, "seed", "", c.seed);

  if (root.contains("output")) {
    const json& o = object_at(root, "output", "output");
    reject_unknown(o, "output", {"path", "format", "timing"});
    read(o, "path", "output", c.output.path);
    read(o, "format", "output", c.output.format);
    check_choice("output.format", c.output.format, {"json", "csv"});
    read(o, "timing", "output", c.output.timing);
  }

  validate_config(c);
  return c;
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return config_from_json(root);
}

json config_to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"theta", c.model.theta},
                {"sigma", c.model.sigma},
                {"refl", c.model.refl},
                {"m_matrix", c.model.m_matrix}};
  j["scenario"] = {{"epsilon", c.scenario.epsilon},
                   {"start", c.scenario.start},
                   {"start_units", c.scenario.start_units},
                   {"n", c.scenario.n}};
  const auto& a = c.algorithm;
  j["algorithm"] = {{"name", a.name},
                    {"split_r", a.split_r},
                    {"delta", a.delta},
                    {"replications", a.replications},
                    {"step", {{"coefficient", a.step_coefficient}, {"power", a.step_power}}},
                    {"max_steps", a.max_steps},
                    {"particle_cap", a.particle_cap},
                    {"subsolution", a.subsolution},
                    {"r_resolution", a.r_resolution},
                    {"r_refine_iters", a.r_refine_iters}};
  j["seed"] = c.seed;
  j["output"] = {{"path", c.output.path},
                 {"format", c.output.format},
                 {"timing", c.output.timing}};
  return j;
}

bool RunManifest::ok() const {
  for (const auto& r : results)
    if (!r.error_code.empty()) return false;
  return true;
}

RunManifest run(const RunConfig& config, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.config = config;
  const ModelParams params = build_params(config);
  const auto& al = config.algorithm;
  const bool needs_sub = al.name != "mc";

  std::optional<Subsolution> sub;
  std::optional<Error> sub_error;
  if (needs_sub) {
    try {
      const bool exact = al.subsolution == "exact2d" ||
                         (al.subsolution == "auto" && params.d == 2);
      if (exact) {
        sub = make_exact_2d(params);
        manifest.subsolution = SubsolutionSummary{"exact2d", sub->r, sub->inf_B};
      } else {
        const ScalingResult sr =
            compute_scaling_r(params, al.r_resolution, al.r_refine_iters);
        sub = make_scaled_l1(sr.r);
        manifest.subsolution = SubsolutionSummary{"scaled_l1", sub->r, sub->inf_B};
      }
    } catch (const Error& e) {
      sub_error = e;
    }
  }

  SplitConfig split;
  split.split_r = al.split_r;
  split.delta = al.delta;
  split.replications = al.replications;
  split.particle_cap = al.particle_cap;

  for (int n : config.scenario.n) {
    NResult res;
    res.n = n;
    try {
      if (sub_error) throw *sub_error;
      const Scenario scenario =
          make_scenario(params, n, config.scenario.epsilon, config.start_point(n));
      SimConfig sim;
      sim.h = config.step(n);
      sim.max_steps = al.max_steps;
      const RunOptions opts{derive_key(config.seed, static_cast<std::uint64_t>(n)),
                            threads};
      if (al.name == "mc") {
        res.report = standard_mc(scenario, params, sim, al.replications, opts);
      } else if (al.name == "split") {
        res.start_level = level_index(*sub, al.delta, al.split_r, n, scenario.start);
        res.report = splitting_estimate(scenario, params, sim, split, *sub, opts);
      } else {
        res.report = restart_estimate(scenario, params, sim, split, *sub, opts);
      }
    } catch (const Error& e) {
      res.error_code = std::string(to_string(e.code()));
      res.error_message = e.what();
    }
    manifest.results.push_back(std::move(res));
  }
  manifest.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return manifest;
}

std::string emit_json(const RunManifest& m) {
  const bool timing = m.config.output.timing;
  json j;
  j["version"] = m.version;
  j["config"] = config_to_json(m.config);
  if (m.subsolution)
    j["subsolution"] = {{"kind", m.subsolution->kind},
                        {"r", m.subsolution->r},
                        {"inf_B", m.subsolution->inf_B}};
  else
    j["subsolution"] = nullptr;
  json results = json::array();
  for (const auto& r : m.results) {
    json e;
    e["n"] = r.n;
    if (!r.report) {
      e["status"] = "failed";
      e["error"] = {{"code", r.error_code}, {"message", r.error_message}};
      results.push_back(e);
      continue;
    }
    const EstimateReport& rep = *r.report;
    e["status"] = "ok";
    e["estimate"] = rep.estimate;
    e["std_error"] = rep.std_error ? json(*rep.std_error) : json(nullptr);
    e["ci95"] = {rep.ci95[0], rep.ci95[1]};
    e["replications"] = rep.replications;
    e["timeouts"] = rep.timeouts;
    e["cap_exceeded"] = rep.cap_exceeded;
    e["particles_mean"] = rep.particles_mean;
    e["particles_std"] = rep.particles_std;
    e["particles_max"] = rep.particles_max;
    e["rel_variance_rate"] =
        rep.rel_variance_rate ? json(*rep.rel_variance_rate) : json(nullptr);
    if (r.start_level) e["start_level"] = *r.start_level;
    if (timing) e["wall_time"] = rep.wall_time;
    results.push_back(e);
  }
  j["results"] = results;
  if (timing) j["wall_time"] = m.wall_time;
  return j.dump(2) + "\n";
}

std::string emit_csv(const RunManifest& m) {
  std::ostringstream out;
  out << "n,estimate,std_error,ci_lo,ci_hi,particles_mean,particles_std,"
         "particles_max,timeouts,wall_time\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return std::string(buf);
  };
  for (const auto& r : m.results) {
    if (!r.report) continue;
    const EstimateReport& rep = *r.report;
    out << r.n << ',' << num(rep.estimate) << ','
        << (rep.std_error ? num(*rep.std_error) : std::string()) << ','
        << num(rep.ci95[0]) << ',' << num(rep.ci95[1]) << ','
        << num(rep.particles_mean) << ',' << num(rep.particles_std) << ','
        << num(rep.particles_max) << ',' << rep.timeouts << ','
        << num(rep.wall_time) << '\n';
  }
  return out.str();
}

void write_manifest(const RunManifest& m) {
  const std::string text =
      m.config.output.format == "csv" ? emit_csv(m) : emit_json(m);
  if (m.config.output.path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(m.config.output.path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + m.config.output.path);
  f << text;
  if (!f) throw Error(ErrorCode::kIoError, "write failed for " + m.config.output.path);
}

namespace {

int default_threads() {
  if (const char* env = std::getenv("SRBM_RARE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Rare-event estimation for reflected Brownian motion in the orthant",
               "srbm-rare"};
  app.require_subcommand(1);
  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");

  std::string config_path, algorithm, out_path, format, n_list;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> replications;
  std::optional<int> threads;
  bool with_timing = false;
  run_cmd->add_option("--config", config_path, "JSON config file")->required();
  run_cmd->add_option("--algorithm", algorithm, "mc | split | restart");
  run_cmd->add_option("--n", n_list, "comma separated scale parameters");
  run_cmd->add_option("--seed", seed, "master seed");
  run_cmd->add_option("--replications", replications, "replications per n");
  run_cmd->add_option("--threads", threads, "worker threads");
  run_cmd->add_option("--out", out_path, "output file (stdout when empty)");
  run_cmd->add_option("--format", format, "json | csv");
  run_cmd->add_flag("--with-timing", with_timing, "include wall-clock fields in JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunConfig config;
  try {
    std::ifstream f(config_path, std::ios::binary);
    if (!f) throw Error(ErrorCode::kIoError, "cannot read " + config_path);
    std::stringstream ss;
    ss << f.rdbuf();
    json root;
    try {
      root = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseError, e.what());
    }
    // Flags override config fields before validation.
    if (!algorithm.empty()) root["algorithm"]["name"] = algorithm;
    if (replications) root["algorithm"]["replications"] = *replications;
    if (seed) root["seed"] = *seed;
    if (!out_path.empty()) root["output"]["path"] = out_path;
    if (!format.empty()) root["output"]["format"] = format;
    if (with_timing) root["output"]["timing"] = true;
    if (!n_list.empty()) {
      json ns = json::array();
      std::stringstream ls(n_list);
      std::string tok;
      while (std::getline(ls, tok, ',')) {
        try {
          std::size_t pos = 0;
          const int v = std::stoi(tok, &pos);
          if (pos != tok.size()) throw std::invalid_argument(tok);
          ns.push_back(v);
        } catch (const std::exception&) {
          throw Error(ErrorCode::kParseError, "--n: cannot parse '" + tok + "'");
        }
      }
      root["scenario"]["n"] = ns;
    }
    config = config_from_json(root);
  } catch (const Error& e) {
    std::cerr << "srbm-rare: " << e.what() << "\n";
    return e.code() == ErrorCode::kIoError ? 2 : 1;
  }

  const int nthreads = threads.value_or(default_threads());
  if (nthreads < 1) {
    std::cerr << "srbm-rare: --threads must be >= 1\n";
    return 1;
  }
  try {
    const RunManifest manifest = run(config, nthreads);
    write_manifest(manifest);
    for (const auto& r : manifest.results)
      if (!r.error_code.empty())
        std::cerr << "srbm-rare: n=" << r.n << " failed: " << r.error_message << "\n";
    return manifest.ok() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "srbm-rare: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace srbm
