// Copyright 2026 The LWSNet Authors. All Rights Reserved.
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

#ifndef LWSNET_PARALLEL_HPP_
#define LWSNET_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace lwsnet {

/// Worker cap for kernels and BLAS. Initialized from LWSNET_THREADS, falling
/// back to the hardware concurrency.
int thread_cap();
void set_thread_cap(int threads);

/// Runs body(begin, end) over a static partition of [0, n). Chunks are
/// disjoint and fixed for a given thread cap, so kernels that write only
/// their own range stay bit-deterministic.
void parallel_for(std::size_t n, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace lwsnet

#endif  // LWSNET_PARALLEL_HPP_
