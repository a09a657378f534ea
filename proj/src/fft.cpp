#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "seacache/errors.hpp"

namespace seacache::detail {

namespace {

struct PlanDeleter {
  void operator()(fftw_plan_s* plan) const { fftw_destroy_plan(plan); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is.
class PlanCache {
 public:
  fftw_plan get(const GridShape& shape, FftDirection direction) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(shape.dims(), direction);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second.get();

    std::vector<int> n(shape.dims().begin(), shape.dims().end());
    std::vector<std::complex<double>> scratch(shape.size());
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    const int sign = direction == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = fftw_plan_dft(static_cast<int>(n.size()), n.data(), data, data, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("FFTW failed to plan " + shape.to_string());
    auto [it, _] = plans_.emplace(std::move(key), PlanHandle(plan));
    return it->second.get();
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::vector<std::size_t>, FftDirection>, PlanHandle> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void fft_inplace(std::span<std::complex<double>> buffer, const GridShape& shape,
                 FftDirection direction) {
  if (buffer.size() != shape.size()) {
    throw InvalidArgument("fft buffer length does not match grid " + shape.to_string());
  }
  fftw_plan plan = plan_cache().get(shape, direction);
  auto* data = reinterpret_cast<fftw_complex*>(buffer.data());
  fftw_execute_dft(plan, data, data);
  if (direction == FftDirection::Inverse) {
    const double scale = 1.0 / static_cast<double>(buffer.size());
    for (auto& v : buffer) v *= scale;
  }
}

}  // namespace seacache::detail
