#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace specsense {

using Complex = std::complex<double>;

/// Error raised for every contract violation in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Complex baseband samples (volts) together with their sample rate.
class IqBuffer {
 public:
  IqBuffer() = default;
  IqBuffer(std::vector<Complex> samples, double sample_rate_hz);

  [[nodiscard]] std::span<const Complex> samples() const { return samples_; }
  [[nodiscard]] std::vector<Complex>& mutable_samples() { return samples_; }
  [[nodiscard]] double rate() const { return rate_; }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] const Complex& operator[](std::size_t i) const { return samples_[i]; }
  [[nodiscard]] Complex& operator[](std::size_t i) { return samples_[i]; }

  friend bool operator==(const IqBuffer&, const IqBuffer&) = default;

 private:
  std::vector<Complex> samples_;
  double rate_ = 1.0;
};

enum class ClassKind { DvbT, LteDl, Wran, Ecma, WirelessMic, NoiseOnly };

/// Ground-truth or predicted signal class. `mode` names the preset
/// (empty for the single-mode WM and noise classes).
struct SignalClass {
  ClassKind kind = ClassKind::NoiseOnly;
  std::string mode;

  friend bool operator==(const SignalClass&, const SignalClass&) = default;
};

std::string to_string(ClassKind kind);
ClassKind class_kind_from_string(const std::string& text);

enum class DetectorId { TdscMrc, CpSw, CpSum, WmParDs };

std::string to_string(DetectorId id);
DetectorId detector_id_from_string(const std::string& text);

/// Power exponent that makes a detector metric dimensionless (V^4 -> 2, V^2 -> 1).
int dic_alpha(DetectorId id);

struct DetectorReport {
  DetectorId detector = DetectorId::CpSum;
  std::string branch;
  double raw_metric = 0.0;
  double dic_metric = 0.0;
  double threshold = 1.0;
  double ratio = 0.0;  // dic_metric / threshold
  bool wm_flag = false;
  // WM diagnostics (PAR and degree of sparsity); zero for OFDM branches.
  double par = 0.0;
  double ds = 0.0;
};

/// Builds a report, keeping ratio == dic_metric / threshold.
DetectorReport make_report(DetectorId id, std::string branch, double raw, double dic, double threshold);

struct ClassDecision {
  enum class Kind { Ofdm, Wm, Vacant };
  Kind kind = Kind::Vacant;
  std::size_t branch = 0;  // index of the winning OFDM report; Ofdm only

  friend bool operator==(const ClassDecision&, const ClassDecision&) = default;
};

/// Mean of |y|^2. Throws on an empty buffer.
double estimate_power(const IqBuffer& buf);
double estimate_power(std::span<const Complex> samples);

/// Multiplies every sample by c > 0.
IqBuffer scale(const IqBuffer& buf, double c);

/// Sum of fn(i) for i in [0, count). Terms are added naively inside blocks of
/// kSumBlock and the block partials are combined pairwise, which keeps the
/// relative error near 1e-13 for a few million terms while short sums
/// (count <= kSumBlock) keep the plain left-to-right order.
inline constexpr std::size_t kSumBlock = 1024;

template <typename T, typename Fn>
T blocked_sum(std::size_t count, Fn&& fn) {
  if (count <= kSumBlock) {
    T acc{};
    for (std::size_t i = 0; i < count; ++i) acc += fn(i);
    return acc;
  }
  std::vector<T> partial;
  partial.reserve(count / kSumBlock + 1);
  for (std::size_t start = 0; start < count; start += kSumBlock) {
    const std::size_t stop = std::min(count, start + kSumBlock);
    T acc{};
    for (std::size_t i = start; i < stop; ++i) acc += fn(i);
    partial.push_back(acc);
  }
  while (partial.size() > 1) {
    std::size_t out = 0;
    for (std::size_t i = 0; i + 1 < partial.size(); i += 2) partial[out++] = partial[i] + partial[i + 1];
    if (partial.size() % 2 == 1) partial[out++] = partial.back();
    partial.resize(out);
  }
  return partial.front();
}

/// Deterministic seed splitting: mixes a master seed with a list of stream
/// indices (splitmix64 finalizer per step). Order of the indices matters.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> indices);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace specsense
