#include "sptrack/batch.hpp"

#include <exception>

#include <omp.h>

namespace sptrack {

void parallel_for_index(std::size_t count, const std::function<void(std::size_t)>& body) {
  std::exception_ptr first;
  const long n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(sptrack_batch_error)
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
}

void serial_for_index(std::size_t count, const std::function<void(std::size_t)>& body) {
  for (std::size_t i = 0; i < count; ++i) body(i);
}

std::vector<SensitivitySample> sample_sensitivities(const SaddleProblem& p, const ChannelModel& model,
                                                    const std::vector<ParameterVector>& hs) {
  std::vector<SensitivitySample> out(hs.size());
  parallel_for_index(hs.size(), [&](std::size_t i) { out[i] = sample_sensitivity(p, model, hs[i]); });
  return out;
}

std::vector<SensitivitySample> sample_sensitivities_serial(const SaddleProblem& p, const ChannelModel& model,
                                                           const std::vector<ParameterVector>& hs) {
  std::vector<SensitivitySample> out(hs.size());
  serial_for_index(hs.size(), [&](std::size_t i) { out[i] = sample_sensitivity(p, model, hs[i]); });
  return out;
}

int worker_count() { return omp_get_max_threads(); }

void set_worker_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace sptrack
