#pragma once

#include <cstdint>
#include <string_view>

namespace numsense {

/// Deterministic child seed for a named random stream. Every random quantity in
/// the pipeline is drawn from a stream keyed by (master seed, stream name,
/// index), so re-running one stage or one item reproduces it exactly.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace numsense
