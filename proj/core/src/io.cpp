#include "semiclassic/io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "semiclassic/error.hpp"

namespace semiclassic {

static_assert(std::endian::native == std::endian::little,
              "dump format is little-endian; add byte swapping for this target");

namespace {

constexpr std::array<char, 4> kKernelMagic{'R', 'S', 'L', 'K'};
constexpr std::array<char, 4> kPhaseMagic{'R', 'S', 'L', 'W'};

template <class T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigError("truncated dump header");
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::array<char, 4> read_magic(std::ifstream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in) throw ConfigError("file too short to be a state dump");
  return magic;
}

void write_payload(std::ofstream& out, const CMatrix& A) {
  out.write(reinterpret_cast<const char*>(A.data()),
            static_cast<std::streamsize>(A.size() * sizeof(Complex)));
  if (!out) throw ConfigError("write failed");
}

void read_payload(std::ifstream& in, CMatrix& A) {
  in.read(reinterpret_cast<char*>(A.data()), static_cast<std::streamsize>(A.size() * sizeof(Complex)));
  if (!in) throw ConfigError("truncated dump payload");
}

void check_version(std::uint32_t version) {
  if (version != kDumpVersion)
    throw ConfigError("unsupported dump version " + std::to_string(version));
}

}  // namespace

void write_kernel(const std::filesystem::path& path, const DensityOperator& op) {
  auto out = open_out(path);
  out.write(kKernelMagic.data(), 4);
  put<std::uint32_t>(out, kDumpVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(op.grid.points()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(op.grid.dim()));
  put<double>(out, op.eps);
  put<std::uint64_t>(out, 0);
  put<double>(out, op.grid.length());
  put<double>(out, 0.0);
  put<double>(out, op.N);
  write_payload(out, op.kernel);
}

DensityOperator read_kernel(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (read_magic(in) != kKernelMagic) throw ConfigError(path.string() + " is not a kernel dump");
  check_version(get<std::uint32_t>(in));
  const auto n = get<std::uint32_t>(in);
  const auto d = get<std::uint32_t>(in);
  const auto eps = get<double>(in);
  get<std::uint64_t>(in);
  const auto length = get<double>(in);
  get<double>(in);
  const auto N = get<double>(in);
  DensityOperator op(SpatialGrid(length, static_cast<int>(n), static_cast<int>(d)), N, eps);
  read_payload(in, op.kernel);
  return op;
}

void write_phase(const std::filesystem::path& path, const PhaseSpaceDensity& W) {
  auto out = open_out(path);
  out.write(kPhaseMagic.data(), 4);
  put<std::uint32_t>(out, kDumpVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(W.grid.velocity_points()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(W.grid.spatial().points()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(W.grid.dim()));
  put<std::uint32_t>(out, 0);
  put<double>(out, W.eps);
  put<double>(out, W.grid.spatial().length());
  put<double>(out, W.grid.v_max());
  put<double>(out, W.N);
  write_payload(out, W.values);
}

PhaseSpaceDensity read_phase(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (read_magic(in) != kPhaseMagic) throw ConfigError(path.string() + " is not a phase-space dump");
  check_version(get<std::uint32_t>(in));
  const auto m = get<std::uint32_t>(in);
  const auto n = get<std::uint32_t>(in);
  const auto d = get<std::uint32_t>(in);
  get<std::uint32_t>(in);
  const auto eps = get<double>(in);
  const auto length = get<double>(in);
  const auto v_max = get<double>(in);
  const auto N = get<double>(in);
  PhaseGrid grid(SpatialGrid(length, static_cast<int>(n), static_cast<int>(d)), v_max,
                 static_cast<int>(m));
  PhaseSpaceDensity W(grid, eps, N);
  read_payload(in, W.values);
  return W;
}

DumpKind peek_dump_kind(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto magic = read_magic(in);
  if (magic == kKernelMagic) return DumpKind::kernel;
  if (magic == kPhaseMagic) return DumpKind::phase;
  throw ConfigError(path.string() + " has no RSLK/RSLW magic");
}

}  // namespace semiclassic
