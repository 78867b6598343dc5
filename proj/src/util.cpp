#include "bqi/linalg.hpp"
#include "bqi/threads.hpp"

#include <cstdlib>
#include <mutex>
#include <stdexcept>

namespace bqi {

RVec psd_pinv_solve(const RMat& a, const RVec& b, double cutoff) {
  Eigen::SelfAdjointEigenSolver<RMat> es(a);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }
  const RVec& vals = es.eigenvalues();
  const RMat& vecs = es.eigenvectors();
  const double thresh = cutoff * std::max(vals.cwiseAbs().maxCoeff(), 0.0);
  RVec y = vecs.transpose() * b;
  for (int i = 0; i < y.size(); ++i) {
    y[i] = (vals[i] > thresh) ? y[i] / vals[i] : 0.0;
  }
  return vecs * y;
}

double pairwise_sum(const double* values, std::ptrdiff_t n) {
  if (n <= 0) return 0.0;
  if (n <= 8) {
    double s = values[0];
    for (std::ptrdiff_t i = 1; i < n; ++i) s += values[i];
    return s;
  }
  const std::ptrdiff_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

double fit_slope(const RVec& x, const RVec& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_slope needs two or more points");
  }
  const double mx = x.mean();
  const double my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  return sxy / sxx;
}

namespace {
int g_thread_count = 0;
std::once_flag g_thread_once;

int detect_threads() {
  if (const char* env = std::getenv("BQI_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}
}  // namespace

int thread_count() {
  std::call_once(g_thread_once, [] { g_thread_count = detect_threads(); });
  return g_thread_count;
}

void set_thread_count(int n) {
  thread_count();
  if (n > 0) g_thread_count = n;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = std::min<std::int64_t>(thread_count(), n);
  if (workers <= 1 || n < 4) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace bqi
