#pragma once

#include <vector>

#include "semiclassic/array.hpp"

namespace semiclassic::fft {

// Sign of the exponent: forward is e^{-i...}, backward is e^{+i...}. Unnormalized both ways.
enum class Direction { forward, backward };

// howmany in-place transforms of a rank-r array of extent `shape`;
// element (i_0..i_{r-1}) of batch b lives at data[b*dist + (row-major flat index)*stride].
struct Layout {
  std::vector<int> shape;
  int howmany = 1;
  int stride = 1;
  int dist = 0;
};

void execute(Complex* data, const Layout& layout, Direction dir);

}  // namespace semiclassic::fft
