#pragma once

#include <cstdint>

namespace dbf {

enum class Stage : std::uint64_t { Calibration = 1, Sync = 2, Localization = 3, Beamforming = 4, Capture = 5 };

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based stream seed: each (master, trial, stage) triple maps to an
/// independent 64-bit seed, so any stage of any trial can be replayed alone.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, Stage stage) noexcept {
    return splitmix64(splitmix64(splitmix64(master) ^ trial) ^ static_cast<std::uint64_t>(stage));
}

}  // namespace dbf
