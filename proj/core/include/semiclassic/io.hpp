#pragma once

#include <filesystem>

#include "semiclassic/states.hpp"

namespace semiclassic {

// Binary state dumps, little-endian throughout.
//   bytes  0..31  header: magic[4], version u32, then
//                   kernel ("RSLK"): n u32, d u32, eps f64, reserved u64 (zero)
//                   phase  ("RSLW"): m u32, n u32, d u32, reserved u32 (zero), eps f64
//   bytes 32..55  grid block: length f64, v_max f64 (0 for kernels), N f64
//   bytes 56..    payload: f64 (re, im) pairs, row-major (kernel n^d x n^d, phase m^d x n^d)
inline constexpr std::uint32_t kDumpVersion = 1;

void write_kernel(const std::filesystem::path& path, const DensityOperator& op);
DensityOperator read_kernel(const std::filesystem::path& path);

void write_phase(const std::filesystem::path& path, const PhaseSpaceDensity& W);
PhaseSpaceDensity read_phase(const std::filesystem::path& path);

enum class DumpKind { kernel, phase };
// Reads only the magic; throws ConfigError for missing or foreign files.
DumpKind peek_dump_kind(const std::filesystem::path& path);

}  // namespace semiclassic
