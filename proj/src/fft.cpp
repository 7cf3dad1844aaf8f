#include "specsense/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace specsense {

namespace {

// FFTW_ESTIMATE keeps the chosen algorithm (and therefore every rounding
// decision) independent of timing, and FFTW_UNALIGNED lets one plan serve
// arbitrary std::vector storage.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> a(n), b(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(a.data()),
                                      reinterpret_cast<fftw_complex*>(b.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw Error("FFT planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void run(std::span<const Complex> in, std::span<Complex> out, int sign) {
  if (in.size() != out.size()) throw Error("FFT input/output length mismatch");
  if (in.empty()) return;
  fftw_plan plan = cache().get(in.size(), sign);
  if (in.data() == out.data()) {
    std::vector<Complex> tmp(in.begin(), in.end());
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()), reinterpret_cast<fftw_complex*>(out.data()));
    return;
  }
  // Out-of-place complex transforms leave the input untouched.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace

void fft_forward(std::span<const Complex> in, std::span<Complex> out) { run(in, out, FFTW_FORWARD); }
void fft_inverse(std::span<const Complex> in, std::span<Complex> out) { run(in, out, FFTW_BACKWARD); }

}  // namespace specsense
