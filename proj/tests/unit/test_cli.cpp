#include "srbm/cli.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace srbm;
using nlohmann::json;

namespace {

const char* kMinimal = R"({
  "model": {"theta": [-2, 1], "sigma": [[1, 0], [0, 1]], "refl": [[1, 0], [-1, 1]]},
  "scenario": {"epsilon": 0.15, "start": [0.1, 0.1], "start_units": "unscaled", "n": [2, 3]},
  "algorithm": {"name": "split", "replications": 50},
  "seed": 9
})";

ErrorCode parse_code(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse failure");
  return ErrorCode::kIoError;
}

std::string parse_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config defaults are filled") {
  const RunConfig c = parse_config(kMinimal);
  CHECK(c.algorithm.split_r == 2);
  CHECK(c.algorithm.delta == 1.0);
  CHECK(c.algorithm.max_steps == 100000000);
  CHECK(c.algorithm.replications == 50);
  CHECK(c.step(5) == doctest::Approx(1.0 / 5000.0));
  CHECK(c.start_point(2)(0) == doctest::Approx(0.05));
  CHECK(c.output.format == "json");
}

TEST_CASE("shipped configs parse to the reference models") {
  const RunConfig c2 = parse_config(read_file(SRBM_SOURCE_DIR "/configs/2d_paper.json"));
  CHECK(c2.model.theta == std::vector<double>{-2.0, 1.0});
  CHECK(c2.model.refl == std::vector<std::vector<double>>{{1, 0}, {-1, 1}});
  CHECK(c2.scenario.epsilon == 0.15);
  CHECK(c2.scenario.n == std::vector<int>{5, 10, 15});
  const RunConfig c3 = parse_config(read_file(SRBM_SOURCE_DIR "/configs/3d_paper.json"));
  CHECK(c3.model.sigma == std::vector<std::vector<double>>{{2, 1, 1}, {1, 2, 1}, {1, 1, 3}});
  CHECK(c3.model.m_matrix);
}

TEST_CASE("config errors name the field") {
  json j = json::parse(kMinimal);
  j["model"].erase("theta");
  CHECK(parse_code(j.dump()) == ErrorCode::kValidationError);
  CHECK(parse_message(j.dump()).find("model.theta") != std::string::npos);

  j = json::parse(kMinimal);
  j["algorithm"]["name"] = "importance";
  CHECK(parse_code(j.dump()) == ErrorCode::kParseError);
  const std::string msg = parse_message(j.dump());
  CHECK(msg.find("mc") != std::string::npos);
  CHECK(msg.find("restart") != std::string::npos);

  CHECK(parse_code("{\"model\": ") == ErrorCode::kParseError);
  CHECK(parse_message("{\n\"model\": }").find("line 2") != std::string::npos);

  j = json::parse(kMinimal);
  j["scenario"]["n"] = json::array();
  CHECK(parse_code(j.dump()) == ErrorCode::kValidationError);

  j = json::parse(kMinimal);
  j["model"]["sigma"] = {{1, 0}, {0, -1}};
  CHECK(parse_code(j.dump()) == ErrorCode::kNotSpd);

  j = json::parse(kMinimal);
  j["scenario"]["start"] = {0.6, 0.6};
  j["scenario"]["start_units"] = "scaled";
  CHECK(parse_code(j.dump()) == ErrorCode::kValidationError);

  j = json::parse(kMinimal);
  j["algorithm"]["step"] = {{"coefficient", -1}};
  CHECK(parse_code(j.dump()) == ErrorCode::kValidationError);

  j = json::parse(kMinimal);
  j["algorithm"]["replications"] = "many";
  CHECK(parse_code(j.dump()) == ErrorCode::kParseError);

  j = json::parse(kMinimal);
  j["algorithm"]["typo"] = 1;
  CHECK(parse_code(j.dump()) == ErrorCode::kParseError);
}

TEST_CASE("config echo round-trips") {
  const RunConfig c = parse_config(kMinimal);
  const RunConfig back = config_from_json(config_to_json(c));
  CHECK(back == c);
  const RunConfig again = parse_config(config_to_json(back).dump());
  CHECK(again == c);
}

TEST_CASE("csv header and rows") {
  RunManifest empty;
  empty.config = parse_config(kMinimal);
  CHECK(emit_csv(empty) ==
        "n,estimate,std_error,ci_lo,ci_hi,particles_mean,particles_std,particles_max,"
        "timeouts,wall_time\n");

  const RunManifest m = run(parse_config(kMinimal), 1);
  const std::string csv = emit_csv(m);
  int lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 3);
  CHECK(csv.find("\n2,") != std::string::npos);
  CHECK(csv.find("\n3,") != std::string::npos);
}

TEST_CASE("manifest content and determinism") {
  const RunConfig c = parse_config(kMinimal);
  const RunManifest a = run(c, 1);
  const RunManifest b = run(c, 3);
  CHECK(a.ok());
  CHECK(emit_json(a) == emit_json(b));

  const json j = json::parse(emit_json(a));
  CHECK(j["version"] == "0.1.0");
  CHECK(j["subsolution"]["kind"] == "exact2d");
  CHECK(j["results"].size() == 2);
  CHECK(j["results"][0]["status"] == "ok");
  CHECK_FALSE(j["results"][0].contains("wall_time"));
  CHECK(config_from_json(j["config"]) == c);

  RunConfig timed = c;
  timed.output.timing = true;
  CHECK(json::parse(emit_json(run(timed, 1))).contains("wall_time"));
}

TEST_CASE("per-n failures are recorded and other n proceed") {
  json j = json::parse(kMinimal);
  j["algorithm"]["subsolution"] = "scaled_l1";  // 2-D reference model has a zero-cost direction
  const RunManifest m = run(parse_config(j.dump()), 1);
  CHECK_FALSE(m.ok());
  REQUIRE(m.results.size() == 2);
  CHECK(m.results[0].error_code == "DegenerateCost");

  j = json::parse(kMinimal);
  j["algorithm"]["name"] = "mc";
  j["algorithm"]["replications"] = 100;
  const RunManifest mc = run(parse_config(j.dump()), 1);
  CHECK(mc.ok());
  CHECK_FALSE(mc.subsolution.has_value());
}

TEST_CASE("command line driver") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "srbm_cli_test";
  fs::create_directories(dir);
  const std::string cfg = (dir / "cfg.json").string();
  {
    std::ofstream f(cfg);
    f << kMinimal;
  }
  const std::string out = (dir / "out.csv").string();
  std::vector<std::string> args{"srbm-rare", "run", "--config", cfg, "--algorithm", "restart",
                                "--n", "2", "--replications", "40", "--threads", "2",
                                "--out", out, "--format", "csv"};
  std::vector<char*> argv;
  for (auto& s : args) argv.push_back(s.data());
  CHECK(cli_main(static_cast<int>(argv.size()), argv.data()) == 0);
  const std::string text = read_file(out);
  CHECK(text.rfind("n,estimate,", 0) == 0);
  CHECK(text.find("\n2,") != std::string::npos);

  std::vector<std::string> bad{"srbm-rare", "run", "--config", cfg, "--algorithm", "nope"};
  std::vector<char*> bargv;
  for (auto& s : bad) bargv.push_back(s.data());
  CHECK(cli_main(static_cast<int>(bargv.size()), bargv.data()) == 1);

  std::vector<std::string> missing{"srbm-rare", "run", "--config", (dir / "absent.json").string()};
  std::vector<char*> margv;
  for (auto& s : missing) margv.push_back(s.data());
  CHECK(cli_main(static_cast<int>(margv.size()), margv.data()) == 2);
  fs::remove_all(dir);
}
