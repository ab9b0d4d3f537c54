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

#ifndef MIAUDIT_STATUS_MACROS_H_
#define MIAUDIT_STATUS_MACROS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

// Error categories used across the toolkit and their absl codes:
//   configuration / bad input           kInvalidArgument
//   missing prerequisite artifact       kNotFound
//   numeric, training, accounting,      kInternal (divergence, non-convergence)
//   attack or metric preconditions      kFailedPrecondition
//   store integrity                     kDataLoss
//   I/O                                 kUnavailable

#define MIAUDIT_STATUS_CONCAT_INNER_(a, b) a##b
#define MIAUDIT_STATUS_CONCAT_(a, b) MIAUDIT_STATUS_CONCAT_INNER_(a, b)

#define MIAUDIT_RETURN_IF_ERROR(expr)           \
  do {                                          \
    const absl::Status _miaudit_status = (expr); \
    if (!_miaudit_status.ok()) return _miaudit_status; \
  } while (0)

#define MIAUDIT_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                  \
  if (!tmp.ok()) return tmp.status();                  \
  lhs = std::move(*tmp)

#define MIAUDIT_ASSIGN_OR_RETURN(lhs, rexpr) \
  MIAUDIT_ASSIGN_OR_RETURN_IMPL_(            \
      MIAUDIT_STATUS_CONCAT_(_miaudit_statusor_, __LINE__), lhs, rexpr)

namespace miaudit {

// Process exit code for a failed command: 2 config, 3 numeric/training,
// 4 store integrity, 1 anything else.
inline int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 0;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kNotFound:
      return 2;
    case absl::StatusCode::kInternal:
    case absl::StatusCode::kFailedPrecondition:
      return 3;
    case absl::StatusCode::kDataLoss:
      return 4;
    default:
      return 1;
  }
}

}  // namespace miaudit

#endif  // MIAUDIT_STATUS_MACROS_H_
