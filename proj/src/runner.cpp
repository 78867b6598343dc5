#include "bqi/runner.hpp"

#include "bqi/eigentask.hpp"
#include "bqi/features.hpp"
#include "bqi/info.hpp"
#include "bqi/rng.hpp"
#include "bqi/threads.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bqi {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kPluginReps = 2000;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string timestamp_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json shots_json(double shots) {
  if (std::isinf(shots)) return "inf";
  return static_cast<std::int64_t>(shots);
}

json optional_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

json circuit_json(const CircuitParams& p) {
  std::vector<double> en(p.theta_en.begin(), p.theta_en.end());
  std::vector<double> de(p.theta_de.begin(), p.theta_de.end());
  return json{{"entangler", en}, {"decoder", de}};
}

void write_manifest(const ExperimentConfig& config, const std::string& command) {
  json m;
  m["tool"] = kToolName;
  m["version"] = kToolVersion;
  m["command"] = command;
  m["seed"] = config.seed;
  m["threads"] = config.threads;
  m["timestamp"] = timestamp_utc();
  m["config"] = json::parse(serialize_config(config));
  write_file(fs::path(config.out_dir) / "manifest.json", m.dump(2) + "\n");
}

void write_results(const ExperimentConfig& config, const json& results) {
  write_file(fs::path(config.out_dir) / "results.json", results.dump(2) + "\n");
}

void write_trace_csv(const fs::path& path, const OptimizerTrace& trace,
                     int parameters) {
  std::string text = "iteration,loss,best";
  for (int d = 0; d < parameters; ++d)
    text += ",p" + std::to_string(d);
  text += "\n";
  for (const TraceRow& row : trace.rows) {
    text += std::to_string(row.evaluation);
    text += "," + format_double(row.value);
    text += "," + format_double(row.best);
    for (Eigen::Index d = 0; d < row.point.size(); ++d)
      text += "," + format_double(row.point[d]);
    text += "\n";
  }
  write_file(path, text);
}

void write_curve_csv(const fs::path& path, const RiskReport& report) {
  std::string text = "u,mse,bias_sq,variance\n";
  for (Eigen::Index i = 0; i < report.grid_u.size(); ++i) {
    text += format_double(report.grid_u[i]);
    text += "," + format_double(report.grid_mse[i]);
    text += "," + format_double(report.grid_bias_sq[i]);
    text += "," + format_double(report.grid_variance[i]);
    text += "\n";
  }
  write_file(path, text);
}

json risk_json(const RiskReport& report) {
  json out;
  out["bmse"] = report.bmse;
  out["bmse_db"] = optional_json(report.bmse_db);
  out["capacity"] = report.capacity;
  out["mse_m"] = optional_json(report.mse_m);
  out["mse_m_db"] =
      report.mse_m ? optional_json(to_decibel(*report.mse_m)) : json(nullptr);
  out["target_second_moment"] = report.target_second_moment;
  out["prior_variance"] = report.prior_variance;
  return out;
}

OptimizerTrace merge_traces(OptimizerTrace first, const OptimizerTrace& second) {
  OptimizerTrace out = std::move(first);
  const double carry = out.rows.empty()
                           ? std::numeric_limits<double>::infinity()
                           : out.best_value;
  for (TraceRow row : second.rows) {
    row.evaluation += out.evaluations;
    row.epoch += out.epochs;
    row.best = std::min(row.best, carry);
    out.rows.push_back(std::move(row));
  }
  if (second.evaluations > 0 &&
      (out.evaluations == 0 || second.best_value <= out.best_value)) {
    out.best_value = second.best_value;
    out.best_point = second.best_point;
  }
  out.evaluations += second.evaluations;
  out.epochs += second.epochs;
  out.stagnated = second.stagnated;
  out.max_diameter = second.max_diameter;
  return out;
}

RiskOptions risk_options(const ExperimentConfig& config) {
  RiskOptions opts;
  opts.quadrature_nodes = config.quadrature_nodes;
  return opts;
}

// Smallest-magnitude representative of an angle, in (-pi, pi].
double wrap_angle(double a) {
  const double two_pi = 6.283185307179586476925286766559;
  double r = std::fmod(a, two_pi);
  if (r > 0.5 * two_pi) r -= two_pi;
  if (r <= -0.5 * two_pi) r += two_pi;
  return r;
}

// Box around `center` shrunk by `scale`, with an absolute floor so a late
// round still has room to re-center. Angles are reduced to their smallest
// representative first so a value just below a full turn is treated as the
// small angle it is.
SearchBox round_box(const RVec& center, double floor_width, double scale) {
  SearchBox box;
  const Eigen::Index dims = center.size();
  box.lower.resize(dims);
  box.upper.resize(dims);
  box.periodic.assign(static_cast<std::size_t>(dims), false);
  constexpr double pi = 3.14159265358979323846;
  for (Eigen::Index d = 0; d < dims; ++d) {
    const double wrapped = wrap_angle(center[d]);
    const double half = std::min(
        std::max(std::max(0.5 * std::abs(wrapped), floor_width) * scale, 1e-3),
        pi);
    box.lower[d] = wrapped - half;
    box.upper[d] = wrapped + half;
  }
  return box;
}

// Preliminary optimum by direct evaluation of structured candidates. Twist
// angles act through quadratic phases whose frequency grows with the squared
// spin projection, so their useful magnitudes spread over decades; the scan
// draws them log-uniformly with either sign and leaves plain rotation angles
// uniform over a period. Every fourth candidate is fully uniform so
// landscapes without that layout still get covered.
OptimizerTrace coarse_scan(const Objective& f, int parameters, int budget,
                           std::uint64_t seed) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double log_lo = std::log(1e-3);
  const double log_hi = std::log(0.5 * two_pi);
  Rng rng(seed);
  OptimizerTrace trace;
  trace.rows.reserve(static_cast<std::size_t>(budget));
  for (int i = 0; i < budget; ++i) {
    RVec x(parameters);
    if (i == 0) {
      x.setZero();
    } else if (i % 4 == 3) {
      for (Eigen::Index d = 0; d < x.size(); ++d)
        x[d] = rng.uniform(0.0, two_pi);
    } else {
      for (Eigen::Index d = 0; d < x.size(); ++d) {
        if (d % 3 == 2) {
          x[d] = rng.uniform(0.0, two_pi);
        } else {
          const double magnitude = std::exp(rng.uniform(log_lo, log_hi));
          x[d] = rng.uniform() < 0.5 ? -magnitude : magnitude;
        }
      }
    }
    const double value = f(x);
    TraceRow row;
    row.evaluation = i + 1;
    row.value = value;
    row.best = trace.rows.empty() ? value
                                  : std::min(value, trace.rows.back().best);
    row.point = x;
    row.rectangles = 0;
    row.epoch = 1;
    if (trace.rows.empty() || value < trace.best_value) {
      trace.best_value = value;
      trace.best_point = x;
    }
    trace.rows.push_back(std::move(row));
  }
  trace.evaluations = budget;
  trace.epochs = 1;
  return trace;
}

// Budget-capped downhill-simplex descent. The refinement boxes above keep
// re-trisecting from scratch, which walks a curved valley slowly; a simplex
// elongates along it instead. Deterministic: no randomness anywhere, and the
// simplex restarts with a quarter step whenever it degenerates.
OptimizerTrace simplex_polish(const Objective& f, const RVec& start,
                              double step, int budget) {
  OptimizerTrace trace;
  const Eigen::Index dims = start.size();
  if (budget <= 0 || dims == 0) return trace;
  trace.rows.reserve(static_cast<std::size_t>(budget));
  trace.best_value = std::numeric_limits<double>::infinity();

  int iteration = 1;
  auto eval = [&](const RVec& x) {
    const double value = f(x);
    TraceRow row;
    row.evaluation = static_cast<int>(trace.rows.size()) + 1;
    row.value = value;
    row.best = trace.rows.empty()
                   ? value
                   : std::min(value, trace.rows.back().best);
    row.point = x;
    row.rectangles = 0;
    row.epoch = iteration;
    trace.rows.push_back(std::move(row));
    if (value < trace.best_value) {
      trace.best_value = value;
      trace.best_point = x;
    }
    return value;
  };
  auto spent = [&] { return static_cast<int>(trace.rows.size()); };

  std::vector<RVec> xs;
  std::vector<double> fs;
  auto init_simplex = [&](const RVec& center, double h) {
    xs.assign(1, center);
    fs.assign(1, eval(center));
    for (Eigen::Index d = 0; d < dims && spent() < budget; ++d) {
      RVec x = center;
      x[d] += h;
      xs.push_back(x);
      fs.push_back(eval(x));
    }
  };

  double h = step;
  init_simplex(start, h);
  while (spent() < budget &&
         xs.size() == static_cast<std::size_t>(dims) + 1) {
    ++iteration;
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<RVec> sorted_x;
    std::vector<double> sorted_f;
    sorted_x.reserve(xs.size());
    sorted_f.reserve(fs.size());
    for (std::size_t i : order) {
      sorted_x.push_back(std::move(xs[i]));
      sorted_f.push_back(fs[i]);
    }
    xs.swap(sorted_x);
    fs.swap(sorted_f);
    const std::size_t worst = xs.size() - 1;

    double spread = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i)
      spread = std::max(spread, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
    if (spread < 1e-10 || fs[worst] - fs[0] < 1e-15) {
      h *= 0.25;
      if (h < 1e-9) break;
      init_simplex(xs[0], h);
      continue;
    }

    RVec centroid = RVec::Zero(dims);
    for (std::size_t i = 0; i < worst; ++i) centroid += xs[i];
    centroid /= static_cast<double>(worst);
    const RVec reflected = centroid + (centroid - xs[worst]);
    const double fr = eval(reflected);
    if (spent() >= budget) break;
    if (fr < fs[0]) {
      const RVec expanded = centroid + 2.0 * (reflected - centroid);
      const double fe = eval(expanded);
      if (fe < fr) {
        xs[worst] = expanded;
        fs[worst] = fe;
      } else {
        xs[worst] = reflected;
        fs[worst] = fr;
      }
    } else if (fr < fs[worst - 1]) {
      xs[worst] = reflected;
      fs[worst] = fr;
    } else {
      const bool outside = fr < fs[worst];
      const RVec contracted =
          centroid + (outside ? 0.5 : -0.5) * (reflected - centroid);
      const double fc = eval(contracted);
      if (fc < (outside ? fr : fs[worst])) {
        xs[worst] = contracted;
        fs[worst] = fc;
      } else {
        for (std::size_t i = 1; i < xs.size() && spent() < budget; ++i) {
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fs[i] = eval(xs[i]);
        }
      }
    }
  }
  trace.evaluations = spent();
  trace.epochs = iteration;
  return trace;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

ObjectiveSpec objective_from_config(const ExperimentConfig& config) {
  ObjectiveSpec spec;
  spec.qubits = config.qubits;
  spec.entangler_layers = config.entangler_layers;
  spec.decoder_layers = config.decoder_layers;
  spec.decoder_half_pi_first = config.decoder_half_pi_first;
  spec.prior = config.prior;
  spec.target = config.target;
  spec.shots = config.shots;
  spec.evaluation = ObjectiveSpec::Evaluation::quadrature;
  spec.quadrature_nodes = config.quadrature_nodes;
  spec.train_count = config.train_count;
  spec.dataset_seed = config.seed;
  return spec;
}

OptimizerOptions optimizer_from_config(const ExperimentConfig& config,
                                       std::uint64_t seed, int budget) {
  OptimizerOptions opts;
  opts.budget = std::max(1, budget);
  opts.seed = seed;
  opts.kappa_start = config.kappa_start;
  opts.kappa_end = config.kappa_end;
  opts.refit_epochs = config.refit_epochs;
  opts.mle_starts = config.mle_starts;
  opts.stagnation_epochs = config.stagnation_epochs;
  opts.use_surrogate = config.use_surrogate;
  opts.kernel_harmonics = config.kernel_harmonics;
  return opts;
}

TrainResult train_circuit(const SpinAlgebra& alg,
                          const ExperimentConfig& config) {
  TrainResult out;
  const ObjectiveSpec spec = objective_from_config(config);
  const int parameters = spec.parameter_count();

  if (config.circuit) {
    out.circuit = *config.circuit;
  } else if (parameters == 0) {
    out.circuit.decoder_half_pi_first = config.decoder_half_pi_first;
  } else {
    const Objective f = make_objective(alg, spec);
    if (config.warm_start && config.budget >= 2) {
      int scan_budget = static_cast<int>(
          std::lround(config.warm_fraction * config.budget));
      scan_budget = std::max(1, std::min(scan_budget, config.budget - 1));
      OptimizerTrace merged =
          coarse_scan(f, parameters, scan_budget, config.seed);
      int polish_budget = static_cast<int>(
          std::lround(config.polish_fraction * config.budget));
      polish_budget = std::min(polish_budget, config.budget - scan_budget);
      // Progressively shrinking boxes around the running best; each round
      // restarts the trisection grid so refinement keeps its pace.
      double scale = 1.0;
      for (int round = 0; round < config.warm_rounds; ++round) {
        const int remaining =
            config.budget - polish_budget - merged.evaluations;
        if (remaining <= 0) break;
        const int rounds_left = config.warm_rounds - round;
        const int quota = (remaining + rounds_left - 1) / rounds_left;
        DirectOptimizer warm(
            round_box(merged.best_point, config.warm_floor, scale),
            optimizer_from_config(config,
                                  substream_seed(config.seed, 1 + round),
                                  quota));
        warm.run(f);
        merged = merge_traces(std::move(merged), warm.trace());
        scale *= config.warm_shrink;
      }
      const int rest = config.budget - merged.evaluations;
      if (rest > 0)
        merged = merge_traces(
            std::move(merged),
            simplex_polish(f, merged.best_point, 0.25, rest));
      out.trace = std::move(merged);
    } else {
      DirectOptimizer single(
          default_box(parameters),
          optimizer_from_config(config, config.seed, config.budget));
      single.run(f);
      out.trace = single.trace();
    }
    out.trained = true;
    out.circuit = CircuitParams::from_vector(
        config.entangler_layers, config.decoder_layers, out.trace.best_point,
        config.decoder_half_pi_first);
  }

  const ObjectiveGrid grid = objective_grid(spec);
  const FeatureTable table =
      exact_features(alg, out.circuit, grid.points, grid.weights, grid.targets);
  out.moments = compute_moments(table);
  out.readout = optimal_weights(out.moments, spec.shots, spec.ridge);
  return out;
}

double plugin_mse_point(const SpinAlgebra& alg, const CircuitParams& p,
                        const RVec& weights, const TargetSpec& target,
                        double u, double shots, std::uint64_t seed) {
  const RVec x = circuit_probabilities(alg, p, u);
  const double fu = target(u);
  if (shots == 1.0) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double err = fu - target(weights[j]);
      acc += x[j] * err * err;
    }
    return acc;
  }
  if (std::isinf(shots)) {
    const double err = fu - target(weights.dot(x));
    return err * err;
  }
  const auto s = static_cast<std::int64_t>(shots);
  std::vector<double> errs(kPluginReps);
  for (int r = 0; r < kPluginReps; ++r) {
    const RVec freq = sample_shots(x, s, substream_seed(seed, r));
    const double err = fu - target(weights.dot(freq));
    errs[r] = err * err;
  }
  return pairwise_sum(errs.data(), kPluginReps) / kPluginReps;
}

double plugin_bayes_mse(const SpinAlgebra& alg, const CircuitParams& p,
                        const RVec& weights, const PriorSpec& prior,
                        const TargetSpec& target, double shots,
                        int quadrature_nodes, int grid_points,
                        std::uint64_t seed) {
  const WeightedGrid grid = evaluation_grid(prior, quadrature_nodes, grid_points);
  const Eigen::Index n = grid.points.size();
  std::vector<double> terms(static_cast<std::size_t>(n));
  parallel_for(n, [&](std::int64_t i) {
    terms[static_cast<std::size_t>(i)] =
        grid.weights[i] * plugin_mse_point(alg, p, weights, target,
                                           grid.points[i], shots,
                                           substream_seed(seed, i));
  });
  return pairwise_sum(terms.data(), static_cast<std::ptrdiff_t>(n));
}

void run_train(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  const SpinAlgebra alg = build_algebra(config.qubits);
  const TrainResult tr = train_circuit(alg, config);
  const RiskReport report =
      bayes_risk(alg, tr.circuit, tr.readout, config.prior, config.target,
                 config.shots, risk_options(config));

  json results = risk_json(report);
  results["command"] = "train";
  results["qubits"] = config.qubits;
  results["shots"] = shots_json(config.shots);
  results["parameters"] = circuit_json(tr.circuit);
  results["objective_loss"] =
      tr.trained ? tr.trace.best_value : tr.readout.predicted_loss;
  results["evaluations"] = tr.trace.evaluations;
  results["epochs"] = tr.trace.epochs;
  results["stagnated"] = tr.trace.stagnated;
  std::vector<double> w(tr.readout.weights.begin(), tr.readout.weights.end());
  results["weights"] = w;

  write_results(config, results);
  write_trace_csv(fs::path(config.out_dir) / "trace.csv", tr.trace,
                  config.parameter_count());
  write_curve_csv(fs::path(config.out_dir) / "mse_curve.csv", report);
  write_manifest(config, "train");
}

void run_compare(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  const SpinAlgebra alg = build_algebra(config.qubits);

  ExperimentConfig phase_config = config;
  phase_config.target = TargetSpec::identity();
  const TrainResult indirect = train_circuit(alg, phase_config);
  const TrainResult direct = train_circuit(alg, config);

  const RiskOptions opts = risk_options(config);
  const RiskReport direct_report =
      bayes_risk(alg, direct.circuit, direct.readout, config.prior,
                 config.target, config.shots, opts);
  const RiskReport phase_report =
      bayes_risk(alg, indirect.circuit, indirect.readout, config.prior,
                 TargetSpec::identity(), config.shots, opts);
  const double indirect_mse = plugin_bayes_mse(
      alg, indirect.circuit, indirect.readout.weights, config.prior,
      config.target, config.shots, config.quadrature_nodes, 4096,
      substream_seed(config.seed, 9001));
  const auto indirect_db = to_decibel(indirect_mse);

  json results;
  results["command"] = "compare";
  results["qubits"] = config.qubits;
  results["shots"] = shots_json(config.shots);
  results["direct"] = {{"bmse", direct_report.bmse},
                       {"bmse_db", optional_json(direct_report.bmse_db)},
                       {"parameters", circuit_json(direct.circuit)},
                       {"evaluations", direct.trace.evaluations}};
  results["indirect"] = {{"bmse", indirect_mse},
                         {"bmse_db", optional_json(indirect_db)},
                         {"phase_bmse", phase_report.bmse},
                         {"phase_bmse_db", optional_json(phase_report.bmse_db)},
                         {"parameters", circuit_json(indirect.circuit)},
                         {"evaluations", indirect.trace.evaluations}};
  results["gap_db"] = (indirect_db && direct_report.bmse_db)
                          ? json(*indirect_db - *direct_report.bmse_db)
                          : json(nullptr);

  write_results(config, results);
  write_trace_csv(fs::path(config.out_dir) / "trace_direct.csv", direct.trace,
                  config.parameter_count());
  write_trace_csv(fs::path(config.out_dir) / "trace_indirect.csv",
                  indirect.trace, config.parameter_count());
  write_curve_csv(fs::path(config.out_dir) / "mse_curve.csv", direct_report);

  // Pointwise risk of the push-through estimate on the display grid.
  std::string text = "u,mse\n";
  const RVec& grid_u = direct_report.grid_u;
  std::vector<double> vals(static_cast<std::size_t>(grid_u.size()));
  parallel_for(grid_u.size(), [&](std::int64_t i) {
    vals[static_cast<std::size_t>(i)] = plugin_mse_point(
        alg, indirect.circuit, indirect.readout.weights, config.target,
        grid_u[i], config.shots, substream_seed(config.seed, 20000 + i));
  });
  for (Eigen::Index i = 0; i < grid_u.size(); ++i)
    text += format_double(grid_u[i]) + "," +
            format_double(vals[static_cast<std::size_t>(i)]) + "\n";
  write_file(fs::path(config.out_dir) / "indirect_curve.csv", text);
  write_manifest(config, "compare");
}

void run_scaling(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  const std::vector<ReferenceRow> refs =
      reference_curves(config.scaling_qubits, config.prior);

  json rows = json::array();
  std::string csv =
      "qubits,bmse,bmse_db,capacity,mse_m,mse_m_db,sql,hl,oqi,evaluations\n";
  std::vector<double> log_l, log_mse_m;
  for (std::size_t i = 0; i < config.scaling_qubits.size(); ++i) {
    const int qubits = config.scaling_qubits[i];
    ExperimentConfig sub = config;
    sub.qubits = qubits;
    sub.seed = substream_seed(config.seed, static_cast<std::uint64_t>(qubits));
    const SpinAlgebra alg = build_algebra(qubits);
    const TrainResult tr = train_circuit(alg, sub);
    const RiskReport report =
        bayes_risk(alg, tr.circuit, tr.readout, config.prior, config.target,
                   config.shots, risk_options(config));

    json row = risk_json(report);
    row["qubits"] = qubits;
    row["sql"] = refs[i].sql;
    row["hl"] = refs[i].hl;
    row["oqi"] = optional_json(refs[i].oqi);
    row["evaluations"] = tr.trace.evaluations;
    row["parameters"] = circuit_json(tr.circuit);
    rows.push_back(std::move(row));

    const auto opt_field = [](const std::optional<double>& v) {
      return v ? format_double(*v) : std::string();
    };
    csv += std::to_string(qubits);
    csv += "," + format_double(report.bmse);
    csv += "," + opt_field(report.bmse_db);
    csv += "," + format_double(report.capacity);
    csv += "," + opt_field(report.mse_m);
    csv += "," + opt_field(report.mse_m ? to_decibel(*report.mse_m)
                                        : std::optional<double>());
    csv += "," + format_double(refs[i].sql);
    csv += "," + format_double(refs[i].hl);
    csv += "," + opt_field(refs[i].oqi);
    csv += "," + std::to_string(tr.trace.evaluations);
    csv += "\n";

    if (report.mse_m && *report.mse_m > 0.0) {
      log_l.push_back(std::log10(static_cast<double>(qubits)));
      log_mse_m.push_back(std::log10(*report.mse_m));
    }
  }

  json results;
  results["command"] = "scaling";
  results["shots"] = shots_json(config.shots);
  results["rows"] = std::move(rows);
  if (log_l.size() >= 2) {
    const auto n = static_cast<Eigen::Index>(log_l.size());
    results["slope"] = fit_slope(Eigen::Map<const RVec>(log_l.data(), n),
                                 Eigen::Map<const RVec>(log_mse_m.data(), n));
  } else {
    results["slope"] = nullptr;
  }

  write_results(config, results);
  write_file(fs::path(config.out_dir) / "scaling.csv", csv);
  write_manifest(config, "scaling");
}

void run_eigentasks(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  const SpinAlgebra alg = build_algebra(config.qubits);
  const TrainResult tr = train_circuit(alg, config);
  const EigentaskBasis basis = solve_eigentasks(tr.moments);
  const int keep = std::min(config.keep_tasks, basis.rank);

  const LinearReadout truncated =
      truncated_readout(basis, keep, tr.moments, config.shots);
  const RiskOptions opts = risk_options(config);
  const RiskReport full_report =
      bayes_risk(alg, tr.circuit, tr.readout, config.prior, config.target,
                 config.shots, opts);
  const RiskReport trunc_report =
      bayes_risk(alg, tr.circuit, truncated, config.prior, config.target,
                 config.shots, opts);

  std::vector<double> betas2(basis.betas2.begin(), basis.betas2.end());
  std::vector<double> snr, cap;
  for (int t = 0; t < basis.rank; ++t) {
    const EigentaskStat stat = expected_snr(basis, t, config.shots);
    snr.push_back(stat.snr);
    cap.push_back(stat.expected_capacity);
  }

  json results;
  results["command"] = "eigentasks";
  results["qubits"] = config.qubits;
  results["shots"] = shots_json(config.shots);
  results["rank"] = basis.rank;
  results["keep"] = keep;
  results["betas2"] = betas2;
  results["snr"] = snr;
  results["expected_capacity"] = cap;
  results["full"] = risk_json(full_report);
  results["truncated"] = risk_json(trunc_report);
  results["penalty_db"] =
      (full_report.bmse_db && trunc_report.bmse_db)
          ? json(*trunc_report.bmse_db - *full_report.bmse_db)
          : json(nullptr);
  results["parameters"] = circuit_json(tr.circuit);

  json tasks = json::array();
  for (int t = 0; t < basis.rank; ++t) {
    std::vector<double> coeffs(basis.combinations.rows());
    for (Eigen::Index k = 0; k < basis.combinations.rows(); ++k)
      coeffs[static_cast<std::size_t>(k)] = basis.combinations(k, t);
    tasks.push_back(std::move(coeffs));
  }
  json detail;
  detail["betas2"] = betas2;
  detail["snr"] = snr;
  detail["expected_capacity"] = cap;
  detail["combinations"] = std::move(tasks);
  write_file(fs::path(config.out_dir) / "eigentasks.json",
             detail.dump(2) + "\n");

  write_results(config, results);
  if (tr.trained)
    write_trace_csv(fs::path(config.out_dir) / "trace.csv", tr.trace,
                    config.parameter_count());
  write_manifest(config, "eigentasks");
}

void run_info(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  const SpinAlgebra alg = build_algebra(config.qubits);
  const TrainResult tr = train_circuit(alg, config);

  RVec sigmas(static_cast<Eigen::Index>(config.info_sigmas.size()));
  for (std::size_t i = 0; i < config.info_sigmas.size(); ++i)
    sigmas[static_cast<Eigen::Index>(i)] = config.info_sigmas[i];
  const ExpansionReport report =
      verify_expansion(alg, tr.circuit, sigmas, config.quadrature_nodes);
  const std::vector<ReferenceRow> refs =
      reference_curves(config.scaling_qubits, config.prior);

  json rows = json::array();
  std::string csv = "sigma,exact_loss,expansion,residual\n";
  for (const ExpansionRow& row : report.rows) {
    rows.push_back({{"sigma", row.sigma},
                    {"exact_loss", row.exact_loss},
                    {"expansion", row.expansion},
                    {"residual", row.residual}});
    csv += format_double(row.sigma);
    csv += "," + format_double(row.exact_loss);
    csv += "," + format_double(row.expansion);
    csv += "," + format_double(row.residual);
    csv += "\n";
  }
  json reference = json::array();
  for (const ReferenceRow& ref : refs)
    reference.push_back({{"qubits", ref.qubits},
                         {"sql", ref.sql},
                         {"hl", ref.hl},
                         {"oqi", optional_json(ref.oqi)}});

  json results;
  results["command"] = "info";
  results["qubits"] = config.qubits;
  results["fisher"] = report.fisher;
  results["bhattacharyya"] = report.bhattacharyya;
  results["fitted_exponent"] = report.fitted_exponent;
  results["rows"] = std::move(rows);
  results["reference"] = std::move(reference);
  results["parameters"] = circuit_json(tr.circuit);

  write_results(config, results);
  write_file(fs::path(config.out_dir) / "info.csv", csv);
  write_manifest(config, "info");
}

void run_sample(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  const SpinAlgebra alg = build_algebra(config.qubits);
  const TrainResult tr = train_circuit(alg, config);

  const auto n = static_cast<Eigen::Index>(config.train_count);
  const RVec inputs = sample_prior(config.prior, n, config.seed);
  const RVec targets = config.target(inputs);
  const RVec uniform = RVec::Constant(n, 1.0 / static_cast<double>(n));
  const FeatureTable table =
      std::isinf(config.shots)
          ? exact_features(alg, tr.circuit, inputs, uniform, targets)
          : sampled_features(alg, tr.circuit, inputs, uniform, targets,
                             static_cast<std::int64_t>(config.shots),
                             substream_seed(config.seed, 2));

  std::string csv = "u,target";
  for (int k = 0; k < table.feature_dim(); ++k)
    csv += ",x" + std::to_string(k);
  csv += "\n";
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    csv += format_double(inputs[i]);
    csv += "," + format_double(targets[i]);
    for (int k = 0; k < table.feature_dim(); ++k)
      csv += "," + format_double(table.rows(i, k));
    csv += "\n";
  }

  json results;
  results["command"] = "sample";
  results["qubits"] = config.qubits;
  results["shots"] = shots_json(config.shots);
  results["rows"] = config.train_count;
  results["parameters"] = circuit_json(tr.circuit);

  write_results(config, results);
  write_file(fs::path(config.out_dir) / "samples.csv", csv);
  write_manifest(config, "sample");
}

}  // namespace bqi
