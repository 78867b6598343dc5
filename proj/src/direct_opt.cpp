#include "bqi/direct_opt.hpp"

#include "bqi/rng.hpp"
#include "bqi/threads.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace bqi {

using nlohmann::json;

void SearchBox::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) {
    throw std::invalid_argument("SearchBox: bad bounds");
  }
  if (!periodic.empty() && Eigen::Index(periodic.size()) != lower.size()) {
    throw std::invalid_argument("SearchBox: periodic flag size mismatch");
  }
  for (Eigen::Index d = 0; d < lower.size(); ++d) {
    if (!(lower[d] < upper[d])) {
      throw std::invalid_argument("SearchBox: lower must be < upper");
    }
    const bool wraps = periodic.empty() || periodic[std::size_t(d)];
    if (wraps && upper[d] - lower[d] > 2.0 * M_PI + 1e-12) {
      throw std::invalid_argument(
          "SearchBox: periodic dimension wider than 2*pi");
    }
  }
}

DirectOptimizer::DirectOptimizer(SearchBox box, OptimizerOptions options)
    : box_(std::move(box)), options_(options) {
  box_.validate();
  if (options_.budget < 1) {
    throw std::invalid_argument("OptimizerOptions: budget must be >= 1");
  }
  kernel_.gamma = RVec::Constant(box_.dims(), 0.6);
  kernel_.signal = 1.0;
  kernel_.noise = 1e-6;
  kernel_.harmonics = options_.kernel_harmonics;
}

RVec DirectOptimizer::denormalize(const RVec& c) const {
  return box_.lower.array() +
         c.array() * (box_.upper.array() - box_.lower.array());
}

double DirectOptimizer::rect_diameter(const std::vector<int>& depth) {
  // Half-diagonal; summation over sorted depths keeps the value bit-identical
  // for any permutation of the same depth multiset.
  std::vector<int> sorted = depth;
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (int t : sorted) acc += std::pow(9.0, -t);
  return 0.5 * std::sqrt(acc);
}

void DirectOptimizer::record(const RVec& original, double value,
                             int rect_count) {
  TraceRow row;
  row.evaluation = ++trace_.evaluations;
  row.value = value;
  row.point = original;
  row.rectangles = rect_count;
  row.epoch = trace_.epochs;
  if (trace_.rows.empty() || value < trace_.best_value) {
    trace_.best_value = value;
    trace_.best_point = original;
  }
  row.best = trace_.best_value;
  trace_.rows.push_back(std::move(row));
}

std::vector<int> DirectOptimizer::potentially_optimal() const {
  // One representative (lowest value, then lowest index) per diameter class.
  std::map<double, int> reps;
  for (int i = 0; i < int(rects_.size()); ++i) {
    auto [it, inserted] = reps.try_emplace(rects_[i].diameter, i);
    if (!inserted && rects_[i].value < rects_[it->second].value) {
      it->second = i;
    }
  }
  std::vector<int> idx;
  idx.reserve(reps.size());
  for (const auto& [d, i] : reps) idx.push_back(i);

  // Lower convex hull of (diameter, value), diameters ascending.
  std::vector<int> hull;
  for (int i : idx) {
    while (hull.size() >= 2) {
      const Rect& a = rects_[hull[hull.size() - 2]];
      const Rect& b = rects_[hull.back()];
      const Rect& c = rects_[i];
      const double cross = (b.diameter - a.diameter) * (c.value - a.value) -
                           (b.value - a.value) * (c.diameter - a.diameter);
      if (cross <= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }

  // Drop hull vertices left of the best value: they need a negative slope.
  double best = std::numeric_limits<double>::max();
  std::size_t start = 0;
  for (std::size_t k = 0; k < hull.size(); ++k) {
    if (rects_[hull[k]].value < best) {
      best = rects_[hull[k]].value;
      start = k;
    }
  }
  std::vector<int> kept;
  for (std::size_t k = start; k < hull.size(); ++k) {
    if (k + 1 < hull.size()) {
      const Rect& a = rects_[hull[k]];
      const Rect& b = rects_[hull[k + 1]];
      const double slope = (b.value - a.value) / (b.diameter - a.diameter);
      const double reach = a.value - slope * a.diameter;
      if (reach > best - options_.hull_epsilon * std::abs(best)) continue;
    }
    kept.push_back(hull[k]);
  }
  if (kept.empty()) kept.push_back(hull.back());
  return kept;
}

void DirectOptimizer::refresh_surrogate(bool refit) {
  const Eigen::Index dims = box_.dims();
  const int count = int(trace_.rows.size());
  if (count < std::max<int>(2 * int(dims) + 2, 6)) return;

  // Training subset: the lowest-value points plus the most recent ones.
  std::vector<int> chosen;
  if (count <= options_.gp_train_cap) {
    chosen.resize(count);
    for (int i = 0; i < count; ++i) chosen[i] = i;
  } else {
    std::vector<int> by_value(count);
    for (int i = 0; i < count; ++i) by_value[i] = i;
    std::stable_sort(by_value.begin(), by_value.end(), [&](int a, int b) {
      return trace_.rows[a].value < trace_.rows[b].value;
    });
    std::vector<char> taken(count, 0);
    const int keep_best = options_.gp_train_cap * 3 / 8;
    for (int k = 0; k < keep_best; ++k) {
      chosen.push_back(by_value[k]);
      taken[by_value[k]] = 1;
    }
    for (int i = count - 1;
         i >= 0 && int(chosen.size()) < options_.gp_train_cap; --i) {
      if (!taken[i]) chosen.push_back(i);
    }
    std::sort(chosen.begin(), chosen.end());
  }

  RMat pts(chosen.size(), dims);
  RVec vals(chosen.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    pts.row(k) = trace_.rows[chosen[k]].point.transpose();
    vals[k] = trace_.rows[chosen[k]].value;
  }
  try {
    auto gp = std::make_unique<Surrogate>(std::move(pts), std::move(vals),
                                          kernel_);
    if (refit || !kernel_ready_) {
      gp->optimize_hyperparameters(
          options_.mle_starts,
          substream_seed(options_.seed, std::uint64_t(trace_.epochs)),
          options_.mle_iterations);
      kernel_ = gp->params();
      kernel_ready_ = true;
      epochs_since_refit_ = 0;
    }
    gp_ = std::move(gp);
  } catch (const std::exception&) {
    gp_.reset();
  }
}

std::optional<int> DirectOptimizer::surrogate_pick(double kappa) {
  if (!options_.use_surrogate || !gp_) return std::nullopt;

  const int count = int(rects_.size());
  std::vector<int> pool;
  if (count <= options_.gp_pool_cap) {
    pool.resize(count);
    for (int i = 0; i < count; ++i) pool[i] = i;
  } else {
    std::vector<int> order(count);
    for (int i = 0; i < count; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return rects_[a].value < rects_[b].value;
    });
    std::vector<char> taken(count, 0);
    const int half = options_.gp_pool_cap / 2;
    for (int k = 0; k < half; ++k) {
      pool.push_back(order[k]);
      taken[order[k]] = 1;
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return rects_[a].diameter > rects_[b].diameter;
    });
    for (int k = 0;
         k < count && int(pool.size()) < options_.gp_pool_cap; ++k) {
      if (!taken[order[k]]) pool.push_back(order[k]);
    }
    std::sort(pool.begin(), pool.end());
  }

  // Score each rectangle by the better of its two prospective child centers
  // under mean - kappa * std, so unexplored children carry real uncertainty.
  std::vector<double> score(pool.size());
  try {
    parallel_for(pool.size(), [&](std::size_t k) {
      const Rect& r = rects_[pool[k]];
      const int min_depth = *std::min_element(r.depth.begin(), r.depth.end());
      const int dim = int(std::find(r.depth.begin(), r.depth.end(),
                                    min_depth) -
                          r.depth.begin());
      const double step = std::pow(3.0, -(min_depth + 1));
      double best = std::numeric_limits<double>::max();
      for (int sgn : {-1, +1}) {
        RVec child = r.center;
        child[dim] += sgn * step;
        const auto pred = gp_->predict(denormalize(child));
        best = std::min(best, pred.mean - kappa * pred.stddev);
      }
      score[k] = best;
    });
  } catch (const std::exception&) {
    return std::nullopt;
  }

  int best_idx = pool[0];
  double best_score = score[0];
  for (std::size_t k = 1; k < pool.size(); ++k) {
    if (score[k] < best_score) {
      best_score = score[k];
      best_idx = pool[k];
    }
  }
  return best_idx;
}

const OptimizerTrace& DirectOptimizer::run(const Objective& f, int eval_cap) {
  const int cap =
      eval_cap < 0 ? options_.budget : std::min(eval_cap, options_.budget);
  const Eigen::Index dims = box_.dims();

  if (rects_.empty()) {
    Rect root;
    root.center = RVec::Constant(dims, 0.5);
    root.depth.assign(std::size_t(dims), 0);
    root.diameter = rect_diameter(root.depth);
    const RVec original = denormalize(root.center);
    root.value = f(original);
    rects_.push_back(std::move(root));
    record(original, rects_[0].value, 1);
    stagnation_best_ = trace_.best_value;
  }

  while (trace_.evaluations < cap && !trace_.stagnated) {
    ++trace_.epochs;
    ++epochs_since_refit_;

    // Rebuilding the surrogate at epoch start keeps the model a pure
    // function of the recorded evaluations, so checkpoints resume exactly.
    if (options_.use_surrogate) {
      refresh_surrogate(epochs_since_refit_ >= options_.refit_epochs);
    }

    const double frac =
        std::min(1.0, double(trace_.evaluations) / options_.budget);
    const double kappa = options_.kappa_start *
                         std::pow(options_.kappa_end / options_.kappa_start,
                                  frac);

    std::vector<int> selected = potentially_optimal();
    if (auto pick = surrogate_pick(kappa)) {
      if (std::find(selected.begin(), selected.end(), *pick) ==
          selected.end()) {
        selected.push_back(*pick);
      }
    }
    std::sort(selected.begin(), selected.end());

    // Plan all splits first so the new centers are fixed before dispatch.
    struct Pending {
      RVec center;
      RVec original;
      std::vector<int> depth;
      double value = 0.0;
      int rect_count = 0;
    };
    std::vector<Pending> pending;
    for (int idx : selected) {
      if (trace_.evaluations + int(pending.size()) + 2 > options_.budget &&
          !pending.empty()) {
        break;  // not enough budget left for another full split
      }
      Rect& r = rects_[idx];
      const int min_depth = *std::min_element(r.depth.begin(), r.depth.end());
      const int dim = int(std::find(r.depth.begin(), r.depth.end(),
                                    min_depth) -
                          r.depth.begin());
      const double step = std::pow(3.0, -(min_depth + 1));
      std::vector<int> child_depth = r.depth;
      child_depth[dim] += 1;
      r.depth = child_depth;
      r.diameter = rect_diameter(r.depth);
      for (int sgn : {-1, +1}) {
        Pending p;
        p.center = r.center;
        p.center[dim] += sgn * step;
        p.original = denormalize(p.center);
        p.depth = child_depth;
        p.rect_count = int(rects_.size()) + int(pending.size()) + 1;
        pending.push_back(std::move(p));
      }
      if (trace_.evaluations + int(pending.size()) >= options_.budget) break;
    }

    const std::size_t allowed = std::min(
        pending.size(),
        std::size_t(options_.budget - trace_.evaluations));
    parallel_for(allowed, [&](std::size_t k) {
      pending[k].value = f(pending[k].original);
    });
    for (std::size_t k = 0; k < allowed; ++k) {
      Rect child;
      child.center = pending[k].center;
      child.depth = pending[k].depth;
      child.value = pending[k].value;
      child.diameter = rect_diameter(child.depth);
      rects_.push_back(std::move(child));
      record(pending[k].original, pending[k].value, int(rects_.size()));
    }

    if (trace_.best_value <
        stagnation_best_ - 1e-12 * (1.0 + std::abs(stagnation_best_))) {
      stagnation_best_ = trace_.best_value;
      stagnation_counter_ = 0;
    } else {
      ++stagnation_counter_;
    }
    if (stagnation_counter_ >= options_.stagnation_epochs) {
      trace_.stagnated = true;
    }
  }

  finish_stats();
  return trace_;
}

void DirectOptimizer::finish_stats() {
  double max_d = 0.0;
  for (const Rect& r : rects_) max_d = std::max(max_d, r.diameter);
  const double box_d = 0.5 * std::sqrt(double(box_.dims()));
  trace_.max_diameter = rects_.empty() ? 1.0 : max_d / box_d;
}

namespace {

json vec_to_json(const RVec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

RVec vec_from_json(const json& a) {
  RVec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[Eigen::Index(i)] = a[i];
  return v;
}

}  // namespace

std::string DirectOptimizer::to_json() const {
  json j;
  j["format"] = 1;
  j["box"]["lower"] = vec_to_json(box_.lower);
  j["box"]["upper"] = vec_to_json(box_.upper);
  j["box"]["periodic"] = box_.periodic;
  json opt;
  opt["budget"] = options_.budget;
  opt["seed"] = options_.seed;
  opt["kappa_start"] = options_.kappa_start;
  opt["kappa_end"] = options_.kappa_end;
  opt["hull_epsilon"] = options_.hull_epsilon;
  opt["refit_epochs"] = options_.refit_epochs;
  opt["mle_starts"] = options_.mle_starts;
  opt["stagnation_epochs"] = options_.stagnation_epochs;
  opt["use_surrogate"] = options_.use_surrogate;
  opt["kernel_harmonics"] = options_.kernel_harmonics;
  opt["gp_train_cap"] = options_.gp_train_cap;
  opt["gp_pool_cap"] = options_.gp_pool_cap;
  opt["mle_iterations"] = options_.mle_iterations;
  j["options"] = opt;
  j["rects"] = json::array();
  for (const Rect& r : rects_) {
    json rj;
    rj["center"] = vec_to_json(r.center);
    rj["depth"] = r.depth;
    rj["value"] = r.value;
    j["rects"].push_back(std::move(rj));
  }
  j["trace"] = json::array();
  for (const TraceRow& row : trace_.rows) {
    json tj;
    tj["evaluation"] = row.evaluation;
    tj["value"] = row.value;
    tj["best"] = row.best;
    tj["point"] = vec_to_json(row.point);
    tj["rectangles"] = row.rectangles;
    tj["epoch"] = row.epoch;
    j["trace"].push_back(std::move(tj));
  }
  j["epochs"] = trace_.epochs;
  j["stagnated"] = trace_.stagnated;
  j["stagnation_counter"] = stagnation_counter_;
  j["stagnation_best"] = stagnation_best_;
  j["epochs_since_refit"] = epochs_since_refit_;
  j["kernel"]["gamma"] = vec_to_json(kernel_.gamma);
  j["kernel"]["signal"] = kernel_.signal;
  j["kernel"]["noise"] = kernel_.noise;
  j["kernel"]["harmonics"] = kernel_.harmonics;
  j["kernel_ready"] = kernel_ready_;
  return j.dump(2);
}

DirectOptimizer DirectOptimizer::from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("format", 0) != 1) {
    throw std::invalid_argument("checkpoint: unknown format");
  }
  DirectOptimizer opt;
  opt.box_.lower = vec_from_json(j["box"]["lower"]);
  opt.box_.upper = vec_from_json(j["box"]["upper"]);
  opt.box_.periodic = j["box"]["periodic"].get<std::vector<bool>>();
  const json& oj = j["options"];
  opt.options_.budget = oj["budget"];
  opt.options_.seed = oj["seed"];
  opt.options_.kappa_start = oj["kappa_start"];
  opt.options_.kappa_end = oj["kappa_end"];
  opt.options_.hull_epsilon = oj["hull_epsilon"];
  opt.options_.refit_epochs = oj["refit_epochs"];
  opt.options_.mle_starts = oj["mle_starts"];
  opt.options_.stagnation_epochs = oj["stagnation_epochs"];
  opt.options_.use_surrogate = oj["use_surrogate"];
  opt.options_.kernel_harmonics = oj["kernel_harmonics"];
  opt.options_.gp_train_cap = oj["gp_train_cap"];
  opt.options_.gp_pool_cap = oj["gp_pool_cap"];
  opt.options_.mle_iterations = oj["mle_iterations"];
  opt.box_.validate();
  for (const json& rj : j["rects"]) {
    Rect r;
    r.center = vec_from_json(rj["center"]);
    r.depth = rj["depth"].get<std::vector<int>>();
    r.value = rj["value"];
    r.diameter = rect_diameter(r.depth);
    opt.rects_.push_back(std::move(r));
  }
  for (const json& tj : j["trace"]) {
    TraceRow row;
    row.evaluation = tj["evaluation"];
    row.value = tj["value"];
    row.best = tj["best"];
    row.point = vec_from_json(tj["point"]);
    row.rectangles = tj["rectangles"];
    row.epoch = tj["epoch"];
    opt.trace_.rows.push_back(std::move(row));
  }
  opt.trace_.evaluations = int(opt.trace_.rows.size());
  opt.trace_.epochs = j["epochs"];
  opt.trace_.stagnated = j["stagnated"];
  if (!opt.trace_.rows.empty()) {
    opt.trace_.best_value = opt.trace_.rows.back().best;
    for (const TraceRow& row : opt.trace_.rows) {
      if (row.value == opt.trace_.best_value) {
        opt.trace_.best_point = row.point;
        break;
      }
    }
  }
  opt.stagnation_counter_ = j["stagnation_counter"];
  opt.stagnation_best_ = j["stagnation_best"];
  opt.epochs_since_refit_ = j["epochs_since_refit"];
  opt.kernel_.gamma = vec_from_json(j["kernel"]["gamma"]);
  opt.kernel_.signal = j["kernel"]["signal"];
  opt.kernel_.noise = j["kernel"]["noise"];
  opt.kernel_.harmonics = j["kernel"]["harmonics"];
  opt.kernel_ready_ = j["kernel_ready"];
  opt.finish_stats();
  return opt;
}

void DirectOptimizer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << to_json();
}

DirectOptimizer DirectOptimizer::load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json(text);
}

OptimizerTrace direct_optimize(const Objective& f, const SearchBox& box,
                               const OptimizerOptions& options) {
  DirectOptimizer opt(box, options);
  return opt.run(f);
}

}  // namespace bqi
