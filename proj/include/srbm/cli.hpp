#pragma once

#include "srbm/estimators.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srbm {

inline constexpr std::string_view kVersion = "0.1.0";

// Plain-data run configuration; matrices are row-major nested vectors so the
// struct compares with == and round-trips through JSON unchanged.
struct RunConfig {
  struct Model {
    std::vector<double> theta;
    std::vector<std::vector<double>> sigma;
    std::vector<std::vector<double>> refl;
    bool m_matrix = false;
    bool operator==(const Model&) const = default;
  } model;

  struct ScenarioBlock {
    double epsilon = 0.15;
    std::vector<double> start;
    // "scaled": start is z_n itself; "unscaled": z_n = start / n.
    std::string start_units = "scaled";
    std::vector<int> n;
    bool operator==(const ScenarioBlock&) const = default;
  } scenario;

  struct Algorithm {
    std::string name = "split";
    int split_r = 2;
    double delta = 1.0;
    std::int64_t replications = 1000;
    // h(n) = 1 / (step_coefficient * n^step_power) on the scaled clock.
    double step_coefficient = 1000.0;
    double step_power = 1.0;
    std::int64_t max_steps = 100'000'000;
    std::int64_t particle_cap = 1'000'000;
    std::string subsolution = "auto";  // auto | exact2d | scaled_l1
    int r_resolution = 40;
    int r_refine_iters = 200;
    bool operator==(const Algorithm&) const = default;
  } algorithm;

  std::uint64_t seed = 0;

  struct Output {
    std::string path;
    std::string format = "json";
    bool timing = false;  // adds wall-clock fields to the JSON manifest
    bool operator==(const Output&) const = default;
  } output;

  bool operator==(const RunConfig&) const = default;

  double step(int n) const;
  Vec start_point(int n) const;
};

// Throws Error(kParseError) for malformed text, unknown names or wrong types,
// Error(kValidationError) or a model error code for semantically invalid data.
RunConfig parse_config(std::string_view text);
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);

ModelParams build_params(const RunConfig& config);

struct SubsolutionSummary {
  std::string kind;
  double r = 1.0;
  double inf_B = 1.0;
};

struct NResult {
  int n = 0;
  std::optional<EstimateReport> report;
  std::optional<int> start_level;  // splitting level of the start point
  std::string error_code;          // empty on success
  std::string error_message;
};

struct RunManifest {
  RunConfig config;
  std::optional<SubsolutionSummary> subsolution;
  std::vector<NResult> results;
  std::string version{kVersion};
  double wall_time = 0.0;

  bool ok() const;
};

RunManifest run(const RunConfig& config, int threads);

std::string emit_json(const RunManifest& manifest);
std::string emit_csv(const RunManifest& manifest);

// Writes the manifest to config.output.path in config.output.format.
void write_manifest(const RunManifest& manifest);

// Entry point of the srbm-rare executable; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace srbm
