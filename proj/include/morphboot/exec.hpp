// Copyright 2026 The morphboot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MORPHBOOT_EXEC_HPP_
#define MORPHBOOT_EXEC_HPP_

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace morphboot {

// Execution policy for the data-parallel kernels. kSerial is the reference
// path kept for testing; both produce identical results because every item
// owns its output slot and its random stream.
enum class Exec { kSerial, kParallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(i) for i in [0, n). Exceptions thrown inside the parallel
// region are captured and the first one (lowest index) is rethrown.
template <typename Body>
void parallel_for(std::size_t n, Exec exec, Body&& body) {
  if (exec == Exec::kSerial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::size_t error_index = n;
  std::mutex mu;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 64)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(mu);
      if (static_cast<std::size_t>(i) < error_index) {
        error_index = static_cast<std::size_t>(i);
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace morphboot

#endif  // MORPHBOOT_EXEC_HPP_
