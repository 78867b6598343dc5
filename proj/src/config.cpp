#include "bqi/config.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace bqi {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path, message);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object");
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) fail(join(path, it.key()), "unknown field");
  }
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  auto wide = v.get<std::int64_t>();
  if (wide < std::numeric_limits<int>::min() ||
      wide > std::numeric_limits<int>::max())
    fail(path, "out of range");
  return static_cast<int>(wide);
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected a boolean");
  return v.get<bool>();
}

std::uint64_t as_seed(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  auto wide = v.get<std::int64_t>();
  if (wide < 0) fail(path, "must be non-negative");
  return static_cast<std::uint64_t>(wide);
}

std::vector<double> as_double_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_double(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

RVec to_rvec(const std::vector<double>& v) {
  return Eigen::Map<const RVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void parse_system(const json& v, ExperimentConfig& cfg) {
  require_object(v, "system");
  check_keys(v, "system",
             {"qubits", "entangler_layers", "decoder_layers",
              "decoder_half_pi_first"});
  if (!v.contains("qubits")) fail("system.qubits", "required");
  cfg.qubits = as_int(v["qubits"], "system.qubits");
  if (v.contains("entangler_layers"))
    cfg.entangler_layers = as_int(v["entangler_layers"],
                                  "system.entangler_layers");
  if (v.contains("decoder_layers"))
    cfg.decoder_layers = as_int(v["decoder_layers"], "system.decoder_layers");
  if (v.contains("decoder_half_pi_first"))
    cfg.decoder_half_pi_first =
        as_bool(v["decoder_half_pi_first"], "system.decoder_half_pi_first");
}

void parse_prior(const json& v, ExperimentConfig& cfg) {
  require_object(v, "prior");
  check_keys(v, "prior", {"kind", "sigma", "components"});
  if (!v.contains("kind")) fail("prior.kind", "required");
  if (!v["kind"].is_string()) fail("prior.kind", "expected a string");
  const std::string kind = v["kind"].get<std::string>();
  if (kind == "gaussian" || kind == "truncated_gaussian") {
    if (v.contains("components"))
      fail("prior.components", "only valid for the mixture kind");
    if (!v.contains("sigma")) fail("prior.sigma", "required");
    double sigma = as_double(v["sigma"], "prior.sigma");
    cfg.prior = kind == "gaussian" ? PriorSpec::gaussian(sigma)
                                   : PriorSpec::truncated_gaussian(sigma);
  } else if (kind == "mixture") {
    if (v.contains("sigma")) fail("prior.sigma", "only valid for the gaussian kinds");
    if (!v.contains("components")) fail("prior.components", "required");
    const json& comps = v["components"];
    if (!comps.is_array() || comps.empty())
      fail("prior.components", "expected a non-empty array");
    std::vector<GaussianComponent> parsed;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      std::string base = "prior.components[" + std::to_string(i) + "]";
      require_object(comps[i], base);
      check_keys(comps[i], base, {"weight", "mean", "sigma"});
      GaussianComponent c;
      if (comps[i].contains("weight"))
        c.weight = as_double(comps[i]["weight"], base + ".weight");
      if (comps[i].contains("mean"))
        c.mean = as_double(comps[i]["mean"], base + ".mean");
      if (!comps[i].contains("sigma")) fail(base + ".sigma", "required");
      c.sigma = as_double(comps[i]["sigma"], base + ".sigma");
      parsed.push_back(c);
    }
    cfg.prior = PriorSpec::mixture(std::move(parsed));
  } else {
    fail("prior.kind",
         "expected one of gaussian, truncated_gaussian, mixture");
  }
}

void parse_target(const json& v, ExperimentConfig& cfg) {
  require_object(v, "target");
  check_keys(v, "target", {"kind", "frequency", "inputs", "values"});
  if (!v.contains("kind")) fail("target.kind", "required");
  if (!v["kind"].is_string()) fail("target.kind", "expected a string");
  const std::string kind = v["kind"].get<std::string>();
  if (kind == "identity") {
    check_keys(v, "target", {"kind"});
    cfg.target = TargetSpec::identity();
  } else if (kind == "sine") {
    check_keys(v, "target", {"kind", "frequency"});
    if (!v.contains("frequency")) fail("target.frequency", "required");
    cfg.target = TargetSpec::sine(as_double(v["frequency"], "target.frequency"));
  } else if (kind == "tabulated") {
    check_keys(v, "target", {"kind", "inputs", "values"});
    if (!v.contains("inputs")) fail("target.inputs", "required");
    if (!v.contains("values")) fail("target.values", "required");
    auto xs = as_double_array(v["inputs"], "target.inputs");
    auto ys = as_double_array(v["values"], "target.values");
    if (xs.size() != ys.size())
      fail("target.values", "length must match target.inputs");
    cfg.target = TargetSpec::tabulated(to_rvec(xs), to_rvec(ys));
  } else {
    fail("target.kind", "expected one of identity, sine, tabulated");
  }
}

void parse_shots(const json& v, ExperimentConfig& cfg) {
  if (v.is_string()) {
    if (v.get<std::string>() != "inf")
      fail("shots", "expected a positive integer or \"inf\"");
    cfg.shots = std::numeric_limits<double>::infinity();
    return;
  }
  cfg.shots = as_double(v, "shots");
}

void parse_dataset(const json& v, ExperimentConfig& cfg) {
  require_object(v, "dataset");
  check_keys(v, "dataset", {"train", "test", "seed"});
  if (v.contains("train")) cfg.train_count = as_int(v["train"], "dataset.train");
  if (v.contains("test")) cfg.test_count = as_int(v["test"], "dataset.test");
  if (v.contains("seed")) cfg.seed = as_seed(v["seed"], "dataset.seed");
}

void parse_optimizer(const json& v, ExperimentConfig& cfg) {
  require_object(v, "optimizer");
  check_keys(v, "optimizer",
             {"budget", "warm_start", "warm_fraction", "warm_floor",
              "warm_rounds", "warm_shrink", "polish_fraction",
              "quadrature_nodes", "kappa_start",
              "kappa_end", "refit_epochs", "mle_starts", "stagnation_epochs",
              "use_surrogate", "kernel_harmonics"});
  if (v.contains("budget")) cfg.budget = as_int(v["budget"], "optimizer.budget");
  if (v.contains("warm_start"))
    cfg.warm_start = as_bool(v["warm_start"], "optimizer.warm_start");
  if (v.contains("warm_fraction"))
    cfg.warm_fraction = as_double(v["warm_fraction"], "optimizer.warm_fraction");
  if (v.contains("warm_floor"))
    cfg.warm_floor = as_double(v["warm_floor"], "optimizer.warm_floor");
  if (v.contains("warm_rounds"))
    cfg.warm_rounds = as_int(v["warm_rounds"], "optimizer.warm_rounds");
  if (v.contains("warm_shrink"))
    cfg.warm_shrink = as_double(v["warm_shrink"], "optimizer.warm_shrink");
  if (v.contains("polish_fraction"))
    cfg.polish_fraction =
        as_double(v["polish_fraction"], "optimizer.polish_fraction");
  if (v.contains("quadrature_nodes"))
    cfg.quadrature_nodes =
        as_int(v["quadrature_nodes"], "optimizer.quadrature_nodes");
  if (v.contains("kappa_start"))
    cfg.kappa_start = as_double(v["kappa_start"], "optimizer.kappa_start");
  if (v.contains("kappa_end"))
    cfg.kappa_end = as_double(v["kappa_end"], "optimizer.kappa_end");
  if (v.contains("refit_epochs"))
    cfg.refit_epochs = as_int(v["refit_epochs"], "optimizer.refit_epochs");
  if (v.contains("mle_starts"))
    cfg.mle_starts = as_int(v["mle_starts"], "optimizer.mle_starts");
  if (v.contains("stagnation_epochs"))
    cfg.stagnation_epochs =
        as_int(v["stagnation_epochs"], "optimizer.stagnation_epochs");
  if (v.contains("use_surrogate"))
    cfg.use_surrogate = as_bool(v["use_surrogate"], "optimizer.use_surrogate");
  if (v.contains("kernel_harmonics"))
    cfg.kernel_harmonics =
        as_int(v["kernel_harmonics"], "optimizer.kernel_harmonics");
}

void parse_circuit(const json& v, ExperimentConfig& cfg) {
  require_object(v, "circuit");
  check_keys(v, "circuit", {"entangler", "decoder"});
  std::vector<double> en, de;
  if (v.contains("entangler"))
    en = as_double_array(v["entangler"], "circuit.entangler");
  if (v.contains("decoder"))
    de = as_double_array(v["decoder"], "circuit.decoder");
  if (en.size() != static_cast<std::size_t>(3 * cfg.entangler_layers))
    fail("circuit.entangler",
         "expected " + std::to_string(3 * cfg.entangler_layers) + " angles");
  if (de.size() != static_cast<std::size_t>(3 * cfg.decoder_layers))
    fail("circuit.decoder",
         "expected " + std::to_string(3 * cfg.decoder_layers) + " angles");
  CircuitParams p;
  p.entangler_layers = cfg.entangler_layers;
  p.decoder_layers = cfg.decoder_layers;
  p.theta_en = to_rvec(en);
  p.theta_de = to_rvec(de);
  p.decoder_half_pi_first = cfg.decoder_half_pi_first;
  cfg.circuit = std::move(p);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (qubits < 1 || qubits > 256)
    throw ConfigError("system.qubits", "must be in [1, 256]");
  if (entangler_layers < 0 || entangler_layers > 32)
    throw ConfigError("system.entangler_layers", "must be in [0, 32]");
  if (decoder_layers < 0 || decoder_layers > 32)
    throw ConfigError("system.decoder_layers", "must be in [0, 32]");
  try {
    prior.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("prior", e.what());
  }
  try {
    target.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("target", e.what());
  }
  if (std::isinf(shots)) {
    if (shots < 0) throw ConfigError("shots", "must be positive");
  } else {
    if (!(shots >= 1.0) || shots > 1e15 || shots != std::floor(shots))
      throw ConfigError("shots", "expected a positive integer or \"inf\"");
  }
  if (train_count < 1 || train_count > 10000000)
    throw ConfigError("dataset.train", "must be in [1, 1e7]");
  if (test_count < 0 || test_count > 10000000)
    throw ConfigError("dataset.test", "must be in [0, 1e7]");
  if (budget < 1 || budget > 1000000)
    throw ConfigError("optimizer.budget", "must be in [1, 1e6]");
  if (!(warm_fraction > 0.0) || !(warm_fraction < 1.0))
    throw ConfigError("optimizer.warm_fraction", "must lie in (0, 1)");
  if (!(warm_floor > 0.0) || warm_floor > 3.2)
    throw ConfigError("optimizer.warm_floor", "must lie in (0, 3.2]");
  if (warm_rounds < 1 || warm_rounds > 64)
    throw ConfigError("optimizer.warm_rounds", "must be in [1, 64]");
  if (!(warm_shrink > 0.0) || warm_shrink > 1.0)
    throw ConfigError("optimizer.warm_shrink", "must lie in (0, 1]");
  if (polish_fraction < 0.0 || !(polish_fraction < 1.0))
    throw ConfigError("optimizer.polish_fraction", "must lie in [0, 1)");
  if (warm_start && !(warm_fraction + polish_fraction < 1.0))
    throw ConfigError("optimizer.polish_fraction",
                      "warm_fraction + polish_fraction must stay below 1");
  if (quadrature_nodes < 3 || quadrature_nodes > 2000)
    throw ConfigError("optimizer.quadrature_nodes", "must be in [3, 2000]");
  if (!(kappa_start > 0.0))
    throw ConfigError("optimizer.kappa_start", "must be positive");
  if (!(kappa_end > 0.0) || kappa_end > kappa_start)
    throw ConfigError("optimizer.kappa_end",
                      "must lie in (0, kappa_start]");
  if (refit_epochs < 1)
    throw ConfigError("optimizer.refit_epochs", "must be at least 1");
  if (mle_starts < 1)
    throw ConfigError("optimizer.mle_starts", "must be at least 1");
  if (stagnation_epochs < 1)
    throw ConfigError("optimizer.stagnation_epochs", "must be at least 1");
  if (kernel_harmonics < 1 || kernel_harmonics > 64)
    throw ConfigError("optimizer.kernel_harmonics", "must be in [1, 64]");
  if (circuit) {
    if (circuit->entangler_layers != entangler_layers ||
        circuit->decoder_layers != decoder_layers)
      throw ConfigError("circuit", "layer counts disagree with system");
    try {
      circuit->validate();
    } catch (const std::exception& e) {
      throw ConfigError("circuit", e.what());
    }
  }
  if (keep_tasks < 1 || keep_tasks > 257)
    throw ConfigError("eigentasks.keep", "must be in [1, 257]");
  if (info_sigmas.empty())
    throw ConfigError("info.sigmas", "expected a non-empty array");
  for (std::size_t i = 0; i < info_sigmas.size(); ++i)
    if (!(info_sigmas[i] > 0.0) || info_sigmas[i] > 10.0)
      throw ConfigError("info.sigmas[" + std::to_string(i) + "]",
                        "must lie in (0, 10]");
  if (scaling_qubits.empty())
    throw ConfigError("scaling.qubits", "expected a non-empty array");
  for (std::size_t i = 0; i < scaling_qubits.size(); ++i) {
    if (scaling_qubits[i] < 1 || scaling_qubits[i] > 256)
      throw ConfigError("scaling.qubits[" + std::to_string(i) + "]",
                        "must be in [1, 256]");
    if (i > 0 && scaling_qubits[i] <= scaling_qubits[i - 1])
      throw ConfigError("scaling.qubits", "must be strictly increasing");
  }
  if (out_dir.empty()) throw ConfigError("output", "must be non-empty");
  if (threads < 0 || threads > 256)
    throw ConfigError("threads", "must be in [0, 256]");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail("json", e.what());
  }
  require_object(j, "json");
  check_keys(j, "",
             {"system", "prior", "target", "shots", "dataset", "optimizer",
              "circuit", "eigentasks", "info", "scaling", "output", "threads"});

  ExperimentConfig cfg;
  if (!j.contains("system")) fail("system", "required");
  parse_system(j["system"], cfg);
  if (j.contains("prior")) parse_prior(j["prior"], cfg);
  if (j.contains("target")) parse_target(j["target"], cfg);
  if (j.contains("shots")) parse_shots(j["shots"], cfg);
  if (j.contains("dataset")) parse_dataset(j["dataset"], cfg);
  if (j.contains("optimizer")) parse_optimizer(j["optimizer"], cfg);
  if (j.contains("circuit")) parse_circuit(j["circuit"], cfg);
  if (j.contains("eigentasks")) {
    require_object(j["eigentasks"], "eigentasks");
    check_keys(j["eigentasks"], "eigentasks", {"keep"});
    if (j["eigentasks"].contains("keep"))
      cfg.keep_tasks = as_int(j["eigentasks"]["keep"], "eigentasks.keep");
  }
  if (j.contains("info")) {
    require_object(j["info"], "info");
    check_keys(j["info"], "info", {"sigmas"});
    if (j["info"].contains("sigmas"))
      cfg.info_sigmas = as_double_array(j["info"]["sigmas"], "info.sigmas");
  }
  if (j.contains("scaling")) {
    require_object(j["scaling"], "scaling");
    check_keys(j["scaling"], "scaling", {"qubits"});
    if (j["scaling"].contains("qubits")) {
      const json& q = j["scaling"]["qubits"];
      if (!q.is_array()) fail("scaling.qubits", "expected an array");
      cfg.scaling_qubits.clear();
      for (std::size_t i = 0; i < q.size(); ++i)
        cfg.scaling_qubits.push_back(
            as_int(q[i], "scaling.qubits[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) fail("output", "expected a string");
    cfg.out_dir = j["output"].get<std::string>();
  }
  if (j.contains("threads")) cfg.threads = as_int(j["threads"], "threads");

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("json", "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["system"] = {{"qubits", c.qubits},
                 {"entangler_layers", c.entangler_layers},
                 {"decoder_layers", c.decoder_layers},
                 {"decoder_half_pi_first", c.decoder_half_pi_first}};

  json prior;
  switch (c.prior.kind) {
    case PriorSpec::Kind::gaussian:
      prior = {{"kind", "gaussian"}, {"sigma", c.prior.sigma}};
      break;
    case PriorSpec::Kind::truncated_gaussian:
      prior = {{"kind", "truncated_gaussian"}, {"sigma", c.prior.sigma}};
      break;
    case PriorSpec::Kind::mixture: {
      json comps = json::array();
      for (const auto& comp : c.prior.components)
        comps.push_back({{"weight", comp.weight},
                         {"mean", comp.mean},
                         {"sigma", comp.sigma}});
      prior = {{"kind", "mixture"}, {"components", std::move(comps)}};
      break;
    }
  }
  j["prior"] = std::move(prior);

  json target;
  switch (c.target.kind) {
    case TargetSpec::Kind::identity:
      target = {{"kind", "identity"}};
      break;
    case TargetSpec::Kind::sine:
      target = {{"kind", "sine"}, {"frequency", c.target.frequency}};
      break;
    case TargetSpec::Kind::tabulated: {
      std::vector<double> xs(c.target.table_u.begin(), c.target.table_u.end());
      std::vector<double> ys(c.target.table_f.begin(), c.target.table_f.end());
      target = {{"kind", "tabulated"}, {"inputs", xs}, {"values", ys}};
      break;
    }
  }
  j["target"] = std::move(target);

  if (std::isinf(c.shots))
    j["shots"] = "inf";
  else
    j["shots"] = static_cast<std::int64_t>(c.shots);

  j["dataset"] = {{"train", c.train_count},
                  {"test", c.test_count},
                  {"seed", c.seed}};
  j["optimizer"] = {{"budget", c.budget},
                    {"warm_start", c.warm_start},
                    {"warm_fraction", c.warm_fraction},
                    {"warm_floor", c.warm_floor},
                    {"warm_rounds", c.warm_rounds},
                    {"warm_shrink", c.warm_shrink},
                    {"polish_fraction", c.polish_fraction},
                    {"quadrature_nodes", c.quadrature_nodes},
                    {"kappa_start", c.kappa_start},
                    {"kappa_end", c.kappa_end},
                    {"refit_epochs", c.refit_epochs},
                    {"mle_starts", c.mle_starts},
                    {"stagnation_epochs", c.stagnation_epochs},
                    {"use_surrogate", c.use_surrogate},
                    {"kernel_harmonics", c.kernel_harmonics}};
  if (c.circuit) {
    std::vector<double> en(c.circuit->theta_en.begin(),
                           c.circuit->theta_en.end());
    std::vector<double> de(c.circuit->theta_de.begin(),
                           c.circuit->theta_de.end());
    j["circuit"] = {{"entangler", en}, {"decoder", de}};
  }
  j["eigentasks"] = {{"keep", c.keep_tasks}};
  j["info"] = {{"sigmas", c.info_sigmas}};
  j["scaling"] = {{"qubits", c.scaling_qubits}};
  j["output"] = c.out_dir;
  j["threads"] = c.threads;
  return j.dump(2) + "\n";
}

}  // namespace bqi
