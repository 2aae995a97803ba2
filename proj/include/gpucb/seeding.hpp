// Copyright 2026 The gpucb-cpd Authors. All Rights Reserved.
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

#ifndef GPUCB_SEEDING_HPP
#define GPUCB_SEEDING_HPP

#include <cstdint>

namespace gpucb {

/// Stream tags for derive_seed.
inline constexpr std::uint64_t kEnvironmentStream = 0;
inline constexpr std::uint64_t kFirstAgentStream = 1;

/// Deterministic, well-mixed seed for (base seed, replication, stream).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t replication, std::uint64_t stream);

}  // namespace gpucb

#endif  // GPUCB_SEEDING_HPP
