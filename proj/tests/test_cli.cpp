#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bqi/config.hpp"
#include "bqi/runner.hpp"
#include "bqi/threads.hpp"

#include "json.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

using namespace bqi;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string expect_config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  FAIL("expected a config error");
  return {};
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.qubits = 3;
  cfg.entangler_layers = 1;
  cfg.decoder_layers = 1;
  cfg.prior = PriorSpec::gaussian(0.7981);
  cfg.shots = 1.0;
  cfg.budget = 60;
  cfg.seed = 11;
  cfg.out_dir = out.string();
  return cfg;
}

int run_cli(const std::string& args) {
  const int status = std::system(("./bqi " + args + " > /dev/null 2>&1").c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config round trip preserves every field") {
  ExperimentConfig cfg;
  cfg.qubits = 32;
  cfg.entangler_layers = 2;
  cfg.decoder_layers = 1;
  cfg.decoder_half_pi_first = true;
  cfg.prior = PriorSpec::mixture({{0.5, -1.0, 0.223}, {0.5, 1.0, 0.223}});
  cfg.target = TargetSpec::sine(10.0);
  cfg.shots = 4.0;
  cfg.train_count = 777;
  cfg.test_count = 111;
  cfg.seed = 0xdeadbeefULL;
  cfg.budget = 4321;
  cfg.warm_start = false;
  cfg.warm_fraction = 0.31;
  cfg.warm_floor = 0.17;
  cfg.polish_fraction = 0.27;
  cfg.quadrature_nodes = 91;
  cfg.kappa_start = 1.7;
  cfg.kappa_end = 0.3;
  cfg.refit_epochs = 7;
  cfg.mle_starts = 3;
  cfg.stagnation_epochs = 12;
  cfg.use_surrogate = false;
  cfg.kernel_harmonics = 5;
  cfg.keep_tasks = 6;
  cfg.info_sigmas = {0.3, 0.11};
  cfg.scaling_qubits = {2, 8, 32};
  cfg.out_dir = "some/dir";
  cfg.threads = 2;

  const ExperimentConfig back = parse_config(serialize_config(cfg));
  CHECK(back.qubits == cfg.qubits);
  CHECK(back.entangler_layers == cfg.entangler_layers);
  CHECK(back.decoder_layers == cfg.decoder_layers);
  CHECK(back.decoder_half_pi_first == cfg.decoder_half_pi_first);
  CHECK(back.prior.kind == cfg.prior.kind);
  REQUIRE(back.prior.components.size() == 2);
  CHECK(back.prior.components[0].mean == cfg.prior.components[0].mean);
  CHECK(back.prior.components[1].sigma == cfg.prior.components[1].sigma);
  CHECK(back.target.kind == cfg.target.kind);
  CHECK(back.target.frequency == cfg.target.frequency);
  CHECK(back.shots == cfg.shots);
  CHECK(back.train_count == cfg.train_count);
  CHECK(back.test_count == cfg.test_count);
  CHECK(back.seed == cfg.seed);
  CHECK(back.budget == cfg.budget);
  CHECK(back.warm_start == cfg.warm_start);
  CHECK(back.warm_fraction == cfg.warm_fraction);
  CHECK(back.warm_floor == cfg.warm_floor);
  CHECK(back.polish_fraction == cfg.polish_fraction);
  CHECK(back.quadrature_nodes == cfg.quadrature_nodes);
  CHECK(back.kappa_start == cfg.kappa_start);
  CHECK(back.kappa_end == cfg.kappa_end);
  CHECK(back.refit_epochs == cfg.refit_epochs);
  CHECK(back.mle_starts == cfg.mle_starts);
  CHECK(back.stagnation_epochs == cfg.stagnation_epochs);
  CHECK(back.use_surrogate == cfg.use_surrogate);
  CHECK(back.kernel_harmonics == cfg.kernel_harmonics);
  CHECK(back.keep_tasks == cfg.keep_tasks);
  CHECK(back.info_sigmas == cfg.info_sigmas);
  CHECK(back.scaling_qubits == cfg.scaling_qubits);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.threads == cfg.threads);
}

TEST_CASE("config round trip keeps special values exact") {
  ExperimentConfig cfg;
  cfg.qubits = 2;
  cfg.shots = kInf;
  cfg.warm_fraction = 0.1 + 0.2;  // not exactly 0.3
  cfg.target = TargetSpec::tabulated(
      (RVec(3) << -1.0, 0.0, 1.0).finished(),
      (RVec(3) << 0.123456789012345678, -7.0, 3.0e-17).finished());
  CircuitParams p;
  p.entangler_layers = 0;
  p.decoder_layers = 0;
  cfg.entangler_layers = 0;
  cfg.decoder_layers = 0;
  cfg.circuit = p;

  const ExperimentConfig back = parse_config(serialize_config(cfg));
  CHECK(std::isinf(back.shots));
  CHECK(back.warm_fraction == cfg.warm_fraction);
  REQUIRE(back.circuit.has_value());
  REQUIRE(back.target.table_f.size() == 3);
  CHECK(back.target.table_f[0] == cfg.target.table_f[0]);
  CHECK(back.target.table_f[2] == cfg.target.table_f[2]);
}

TEST_CASE("config errors name the offending field") {
  CHECK(expect_config_error(R"({"prior":{"kind":"gaussian","sigma":1}})") ==
        "system");
  CHECK(expect_config_error(R"({"system":{}})") == "system.qubits");
  CHECK(expect_config_error(R"({"system":{"qubits":0}})") == "system.qubits");
  CHECK(expect_config_error(R"({"system":{"qubits":2.5}})") ==
        "system.qubits");
  CHECK(expect_config_error(
            R"({"system":{"qubits":2},"optimizer":{"bugdet":10}})") ==
        "optimizer.bugdet");
  CHECK(expect_config_error(
            R"({"system":{"qubits":2},"optimizer":{"budget":0}})") ==
        "optimizer.budget");
  CHECK(expect_config_error(
            R"({"system":{"qubits":2},"optimizer":{"warm_fraction":1.0}})") ==
        "optimizer.warm_fraction");
  CHECK(expect_config_error(R"({"system":{"qubits":2},"shots":0})") ==
        "shots");
  CHECK(expect_config_error(R"({"system":{"qubits":2},"shots":2.5})") ==
        "shots");
  CHECK(expect_config_error(R"({"system":{"qubits":2},"shots":"lots"})") ==
        "shots");
  CHECK(expect_config_error(
            R"({"system":{"qubits":2},"prior":{"kind":"cauchy","sigma":1}})") ==
        "prior.kind");
  CHECK(expect_config_error(
            R"({"system":{"qubits":2},"prior":{"kind":"mixture"}})") ==
        "prior.components");
  CHECK(expect_config_error(
            R"({"system":{"qubits":2},"target":{"kind":"sine"}})") ==
        "target.frequency");
  CHECK(expect_config_error(
            R"({"system":{"qubits":2},"target":{"kind":"identity","frequency":3}})") ==
        "target.frequency");
  CHECK(expect_config_error(
            R"({"system":{"qubits":2},"scaling":{"qubits":[4,4]}})") ==
        "scaling.qubits");
  CHECK(expect_config_error(
            R"({"system":{"qubits":2,"entangler_layers":1},"circuit":{"entangler":[1,2],"decoder":[]}})") ==
        "circuit.entangler");
  CHECK(expect_config_error("{not json") == "json");
}

TEST_CASE("train bundle is byte-identical across runs and thread counts") {
  const fs::path dir_a = fresh_dir("bqi_cli_bundle_a");
  const fs::path dir_b = fresh_dir("bqi_cli_bundle_b");

  ExperimentConfig cfg = tiny_config(dir_a);
  set_thread_count(1);
  run_train(cfg);
  cfg.out_dir = dir_b.string();
  set_thread_count(3);
  run_train(cfg);
  set_thread_count(1);

  for (const char* name : {"results.json", "trace.csv", "mse_curve.csv"}) {
    INFO(name);
    CHECK(read_file(dir_a / name) == read_file(dir_b / name));
  }

  // The manifests differ only in timestamp and target directory.
  json ma = json::parse(read_file(dir_a / "manifest.json"));
  json mb = json::parse(read_file(dir_b / "manifest.json"));
  ma.erase("timestamp");
  mb.erase("timestamp");
  ma["config"].erase("output");
  mb["config"].erase("output");
  CHECK(ma == mb);
  CHECK(ma["tool"] == "bqi");
  CHECK(ma["command"] == "train");
}

TEST_CASE("manifest echo reproduces the bundle exactly") {
  const fs::path dir_a = fresh_dir("bqi_cli_manifest_a");
  const fs::path dir_b = fresh_dir("bqi_cli_manifest_b");

  run_train(tiny_config(dir_a));
  const json manifest = json::parse(read_file(dir_a / "manifest.json"));
  ExperimentConfig echoed = parse_config(manifest["config"].dump());
  echoed.out_dir = dir_b.string();
  run_train(echoed);

  for (const char* name : {"results.json", "trace.csv", "mse_curve.csv"}) {
    INFO(name);
    CHECK(read_file(dir_a / name) == read_file(dir_b / name));
  }
}

TEST_CASE("bundle files parse and use plain decimal points") {
  const fs::path dir = fresh_dir("bqi_cli_format");
  run_train(tiny_config(dir));

  const json results = json::parse(read_file(dir / "results.json"));
  CHECK(results["command"] == "train");
  CHECK(results["bmse"].is_number());
  CHECK(results["evaluations"].get<int>() == 60);

  const std::string trace = read_file(dir / "trace.csv");
  CHECK(trace.rfind("iteration,loss,best,p0,p1,p2,p3,p4,p5\n", 0) == 0);
  CHECK(trace.find(';') == std::string::npos);

  const std::string curve = read_file(dir / "mse_curve.csv");
  CHECK(curve.rfind("u,mse,bias_sq,variance\n", 0) == 0);

  // Every data field must parse as a double in the C locale.
  std::istringstream lines(curve);
  std::string line;
  std::getline(lines, line);  // header
  int parsed = 0;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      std::size_t used = 0;
      (void)std::stod(field, &used);
      CHECK(used == field.size());
      ++parsed;
    }
  }
  CHECK(parsed > 100);
}

TEST_CASE("trace best column is monotone and matches the summary") {
  const fs::path dir = fresh_dir("bqi_cli_trace");
  ExperimentConfig cfg = tiny_config(dir);
  run_train(cfg);

  const std::string trace = read_file(dir / "trace.csv");
  std::istringstream lines(trace);
  std::string line;
  std::getline(lines, line);
  double best = std::numeric_limits<double>::infinity();
  double last_best = best;
  int rows = 0;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string it, loss, bst;
    std::getline(fields, it, ',');
    std::getline(fields, loss, ',');
    std::getline(fields, bst, ',');
    const double value = std::stod(loss);
    const double b = std::stod(bst);
    best = std::min(best, value);
    CHECK(b == doctest::Approx(best).epsilon(1e-12));
    CHECK(b <= last_best + 1e-15);
    last_best = b;
    ++rows;
  }
  CHECK(rows == 60);

  const json results = json::parse(read_file(dir / "results.json"));
  CHECK(results["objective_loss"].get<double>() ==
        doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("identity target makes both comparison routes agree") {
  const fs::path dir = fresh_dir("bqi_cli_compare_id");
  ExperimentConfig cfg = tiny_config(dir);
  cfg.decoder_layers = 0;
  cfg.budget = 40;
  run_compare(cfg);

  const json results = json::parse(read_file(dir / "results.json"));
  REQUIRE(results["gap_db"].is_number());
  CHECK(std::abs(results["gap_db"].get<double>()) < 1e-9);
  CHECK(results["indirect"]["bmse"].get<double>() ==
        doctest::Approx(results["direct"]["bmse"].get<double>())
            .epsilon(1e-10));
}

TEST_CASE("cli exit codes distinguish config and usage problems") {
  if (!fs::exists("./bqi")) {
    MESSAGE("cli binary not in working directory; run under ctest");
    return;
  }
  const fs::path dir = fresh_dir("bqi_cli_exit");
  const fs::path good = dir / "good.json";
  const fs::path bad = dir / "bad.json";
  ExperimentConfig cfg = tiny_config(dir / "out");
  cfg.qubits = 2;
  cfg.entangler_layers = 1;
  cfg.decoder_layers = 0;
  cfg.budget = 5;
  std::ofstream(good) << serialize_config(cfg);
  std::ofstream(bad) << R"({"system":{"qubits":-3}})";

  CHECK(run_cli("train --config " + good.string()) == 0);
  CHECK(fs::exists(dir / "out" / "results.json"));
  CHECK(run_cli("train --config " + bad.string()) == 2);
  CHECK(run_cli("train --config " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("train") == 2);                 // missing required flag
  CHECK(run_cli("frobnicate --config x") == 2); // unknown command
  CHECK(run_cli("--help") == 0);

  // Overrides reach the manifest.
  CHECK(run_cli("train --config " + good.string() + " --out " +
                (dir / "out2").string() + " --seed 99 --budget 7") == 0);
  const json manifest = json::parse(read_file(dir / "out2" / "manifest.json"));
  CHECK(manifest["seed"].get<std::uint64_t>() == 99);
  CHECK(manifest["config"]["optimizer"]["budget"].get<int>() == 7);
  const json results = json::parse(read_file(dir / "out2" / "results.json"));
  CHECK(results["evaluations"].get<int>() > 0);
  CHECK(results["evaluations"].get<int>() <= 7);
}
