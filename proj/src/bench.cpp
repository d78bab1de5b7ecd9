#include "neuflow/bench.hpp"

#include <algorithm>
#include <cstdlib>

#include <omp.h>

namespace neuflow {

int64_t bench_threads() { return omp_get_max_threads(); }

void pin_bench_threads() {
  // benchmarks run single-threaded unless the caller configured otherwise
  if (!std::getenv("OMP_NUM_THREADS")) omp_set_num_threads(1);
}

void summarize_timings(std::vector<double> t, BenchReport& r) {
  NF_CHECK(!t.empty(), "bench: no timings");
  std::sort(t.begin(), t.end());
  const size_t n = t.size();
  r.median_s = n % 2 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
  double s = 0;
  for (double x : t) s += x;
  r.mean_s = s / n;
  r.p95_s = t[std::min(n - 1, static_cast<size_t>(0.95 * n))];
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json j{{"variant", variant},
                   {"resolution", resolution},
                   {"reps", reps},
                   {"warmup", warmup},
                   {"threads", threads},
                   {"median_s", median_s},
                   {"mean_s", mean_s},
                   {"p95_s", p95_s}};
  if (iters16 >= 0) j["iters16"] = iters16;
  if (iters8 >= 0) j["iters8"] = iters8;
  return j;
}

}  // namespace neuflow
