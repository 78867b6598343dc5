#pragma once

#include "bqi/linalg.hpp"
#include "bqi/surrogate.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bqi {

using Objective = std::function<double(const RVec&)>;

struct SearchBox {
  RVec lower;
  RVec upper;
  std::vector<bool> periodic;  // empty means all periodic

  void validate() const;
  Eigen::Index dims() const { return lower.size(); }
};

struct OptimizerOptions {
  int budget = 1000;
  std::uint64_t seed = 0;
  double kappa_start = 2.0;
  double kappa_end = 0.1;
  double hull_epsilon = 1e-4;
  int refit_epochs = 5;
  int mle_starts = 8;
  int stagnation_epochs = 30;
  bool use_surrogate = true;
  int kernel_harmonics = 8;
  int gp_train_cap = 96;
  int gp_pool_cap = 512;
  int mle_iterations = 60;
};

struct TraceRow {
  int evaluation = 0;  // 1-based
  double value = 0.0;  // raw objective value
  double best = 0.0;   // best seen up to and including this evaluation
  RVec point;          // original (un-normalized) coordinates
  int rectangles = 0;
  int epoch = 0;
};

struct OptimizerTrace {
  std::vector<TraceRow> rows;
  RVec best_point;
  double best_value = 0.0;
  int evaluations = 0;
  int epochs = 0;
  bool stagnated = false;
  double max_diameter = 1.0;  // largest remaining rectangle, fraction of box
};

/// Deterministic global minimization: DIRECT-style trisection of the box
/// with candidate rectangles chosen as the union of the potentially-optimal
/// hull and the best rectangle under a GP acquisition score.  Resumable via
/// JSON snapshots.
class DirectOptimizer {
 public:
  DirectOptimizer(SearchBox box, OptimizerOptions options);

  /// Continue until the budget or the stagnation window is exhausted.
  /// Safe to call repeatedly; each call picks up where the last stopped.
  /// A non-negative eval_cap pauses at the first epoch boundary at or past
  /// that many total evaluations (for checkpointing).
  const OptimizerTrace& run(const Objective& f, int eval_cap = -1);

  const OptimizerTrace& trace() const { return trace_; }
  const SearchBox& box() const { return box_; }
  const OptimizerOptions& options() const { return options_; }

  std::string to_json() const;
  static DirectOptimizer from_json(const std::string& text);

  void save_checkpoint(const std::string& path) const;
  static DirectOptimizer load_checkpoint(const std::string& path);

 private:
  struct Rect {
    RVec center;             // normalized [0,1] coordinates
    std::vector<int> depth;  // trisection count per dimension
    double value = 0.0;
    double diameter = 0.0;
  };

  DirectOptimizer() = default;
  RVec denormalize(const RVec& c) const;
  static double rect_diameter(const std::vector<int>& depth);
  void record(const RVec& original, double value, int rect_count);
  std::vector<int> potentially_optimal() const;
  std::optional<int> surrogate_pick(double kappa);
  void refresh_surrogate(bool refit);
  void finish_stats();

  SearchBox box_;
  OptimizerOptions options_;
  std::vector<Rect> rects_;
  OptimizerTrace trace_;
  TrigKernelParams kernel_;
  bool kernel_ready_ = false;
  std::unique_ptr<Surrogate> gp_;
  int stagnation_counter_ = 0;
  double stagnation_best_ = 0.0;
  int epochs_since_refit_ = 0;
};

OptimizerTrace direct_optimize(const Objective& f, const SearchBox& box,
                               const OptimizerOptions& options);

}  // namespace bqi
