#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sptrack/equilibrium.hpp"

namespace sptrack {

/// Runs body(i) for i in [0, count) on the OpenMP team (dynamic schedule).
/// The first exception thrown by any body is rethrown after the loop.
void parallel_for_index(std::size_t count, const std::function<void(std::size_t)>& body);
/// Reference implementation: plain loop in index order.
void serial_for_index(std::size_t count, const std::function<void(std::size_t)>& body);

/// Saddle point and sensitivity at each parameter draw, in parallel. Results
/// are stored by index, so output does not depend on the thread count.
std::vector<SensitivitySample> sample_sensitivities(const SaddleProblem& p, const ChannelModel& model,
                                                    const std::vector<ParameterVector>& hs);
std::vector<SensitivitySample> sample_sensitivities_serial(const SaddleProblem& p, const ChannelModel& model,
                                                           const std::vector<ParameterVector>& hs);

/// Number of threads parallel_for_index will use.
int worker_count();
void set_worker_count(int n);

}  // namespace sptrack
