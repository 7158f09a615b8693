// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace reer {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// 64-bit FNV-1a; used for seeding, never for content addressing.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer, for deriving independent seeds from one base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace reer
