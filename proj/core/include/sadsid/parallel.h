// Copyright 2026 The sadsid Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SADSID_PARALLEL_H_
#define SADSID_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace sadsid {

// Runs fn(i) for every i in [0, n) on up to `workers` threads. Each index runs
// exactly once; callers write results into per-index slots so the outcome is
// independent of scheduling. The first exception thrown by any task is
// rethrown on the calling thread after all workers join.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

}  // namespace sadsid

#endif  // SADSID_PARALLEL_H_
