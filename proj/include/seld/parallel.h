// Copyright 2026 The SELD Forge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SELD_PARALLEL_H_
#define SELD_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace seld {

// Worker count from SELD_FORGE_THREADS (default 1, minimum 1).
int ThreadLimit();

// Runs fn(i) for i in [0, n) on up to ThreadLimit() threads. Each index is
// processed exactly once; callers write results into per-index slots so
// the outcome does not depend on scheduling. The first exception thrown by
// any worker is rethrown.
void ParallelFor(size_t n, const std::function<void(size_t)>& fn);

}  // namespace seld

#endif  // SELD_PARALLEL_H_
