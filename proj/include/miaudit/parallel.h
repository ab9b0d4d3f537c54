// Copyright 2026 The miaudit Authors
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

#ifndef MIAUDIT_PARALLEL_H_
#define MIAUDIT_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "absl/status/status.h"

namespace miaudit {

// Runs fn(0..n-1) on up to `jobs` threads and returns the error of the lowest
// failing index, so the reported error does not depend on scheduling.
inline absl::Status ParallelFor(size_t n, int jobs,
                                const std::function<absl::Status(size_t)>& fn) {
  std::vector<absl::Status> results(n);
  const size_t workers = std::min<size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) {
      results[i] = fn(i);
      if (!results[i].ok()) return results[i];
    }
    return absl::OkStatus();
  }
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::thread> threads;
  for (size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (size_t i = next++; i < n && !failed; i = next++) {
        results[i] = fn(i);
        if (!results[i].ok()) failed = true;
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const absl::Status& s : results) {
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace miaudit

#endif  // MIAUDIT_PARALLEL_H_
