#pragma once

#include "bqi/dataset.hpp"
#include "bqi/prior.hpp"
#include "bqi/spin.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bqi {

/// Invalid configuration input; `path` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ExperimentConfig {
  // system
  int qubits = 1;
  int entangler_layers = 0;
  int decoder_layers = 0;
  bool decoder_half_pi_first = false;

  PriorSpec prior = PriorSpec::gaussian(1.0);
  TargetSpec target = TargetSpec::identity();
  double shots = 1.0;  // may be infinite

  // dataset
  int train_count = 10000;
  int test_count = 2000;
  std::uint64_t seed = 1234;

  // optimizer
  int budget = 2000;
  bool warm_start = true;        // cold scan first, then the 50%..150% box
  double warm_fraction = 0.4;    // share of the budget spent on the cold scan
  double warm_floor = 0.1;       // minimum warm-box half-width
  int warm_rounds = 3;           // restarts around the running best
  double warm_shrink = 0.3;      // half-width scale between rounds
  double polish_fraction = 0.5;  // budget share for the final simplex descent
  int quadrature_nodes = 75;
  double kappa_start = 2.0;
  double kappa_end = 0.1;
  int refit_epochs = 5;
  int mle_starts = 8;
  int stagnation_epochs = 30;
  bool use_surrogate = true;
  int kernel_harmonics = 8;

  // command extras
  std::optional<CircuitParams> circuit;  // skips training when present
  int keep_tasks = 4;                    // eigentask truncation size
  std::vector<double> info_sigmas{0.4, 0.2, 0.1, 0.05, 0.02, 0.01};
  std::vector<int> scaling_qubits{4, 8, 16, 32};

  std::string out_dir = "out";
  int threads = 0;  // 0 = library default

  void validate() const;  // throws ConfigError
  int parameter_count() const {
    return 3 * (entangler_layers + decoder_layers);
  }
};

/// Parse and validate a JSON document; unknown fields are rejected so typos
/// surface immediately. Errors carry the field path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Serialization is lossless: parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace bqi
