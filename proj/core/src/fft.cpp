#include "semiclassic/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "semiclassic/error.hpp"

namespace semiclassic::fft {

namespace {

using Key = std::tuple<std::vector<int>, int, int, int, bool, int>;

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(Complex* data, const Layout& layout, Direction dir) {
    auto* raw = reinterpret_cast<double*>(data);
    const int alignment = fftw_alignment_of(raw);
    Key key{layout.shape, layout.howmany, layout.stride, layout.dist, dir == Direction::forward,
            alignment};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    // FFTW_ESTIMATE never touches the arrays and picks the same algorithm every run.
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_plan plan = fftw_plan_many_dft(
        static_cast<int>(layout.shape.size()), layout.shape.data(), layout.howmany, buf, nullptr,
        layout.stride, layout.dist, buf, nullptr, layout.stride, layout.dist,
        dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    if (plan == nullptr) throw NumericalError("fftw planner failed");
    plans_.emplace(std::move(key), plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void execute(Complex* data, const Layout& layout, Direction dir) {
  if (layout.shape.empty() || layout.howmany <= 0) return;
  fftw_plan plan = cache().get(data, layout, dir);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace semiclassic::fft
