#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "specsense/core.hpp"

namespace specsense::dsp {

/// Kaiser window shape parameter for a stopband attenuation in dB.
double kaiser_beta(double atten_db);

/// Odd Kaiser filter length meeting `atten_db` across a transition band of
/// `transition` cycles/sample.
std::size_t kaiser_length(double atten_db, double transition);

/// Windowed-sinc lowpass with unit DC gain. `cutoff` is the -6 dB point in
/// cycles/sample (0 < cutoff < 0.5); the transition band is centered on it.
std::vector<double> design_lowpass(double cutoff, double transition, double atten_db);

/// Linear convolution trimmed to the input length: y[n] = (h * x)[n + delay].
/// Long filters run through FFT overlap-save; short ones in direct form.
std::vector<Complex> filter_same(std::span<const Complex> x, std::span<const Complex> taps, std::size_t delay);

/// Direct-form reference used for short filters and as a test oracle.
std::vector<Complex> filter_same_direct(std::span<const Complex> x, std::span<const Complex> taps,
                                        std::size_t delay);

struct Rational {
  std::uint64_t p = 1;  // interpolation factor
  std::uint64_t q = 1;  // decimation factor
};

/// Best rational approximation p/q of `ratio` with q <= max_denominator.
/// Throws unless the approximation is exact to 1e-12 relative.
Rational rational_ratio(double ratio, std::uint64_t max_denominator);

/// Polyphase rational resampler (upsample by p, lowpass, decimate by q).
/// The anti-alias/anti-image filter is centered on the lower Nyquist
/// frequency so that white input stays close to white at the output rate.
class Resampler {
 public:
  Resampler(double in_rate_hz, double out_rate_hz, std::uint64_t max_denominator = 4096,
            double atten_db = 60.0, double transition_fraction = 0.1);

  [[nodiscard]] IqBuffer process(const IqBuffer& in) const;
  [[nodiscard]] Rational ratio() const { return ratio_; }
  [[nodiscard]] double out_rate() const { return out_rate_; }
  [[nodiscard]] std::size_t taps() const { return prototype_len_; }
  /// Prototype lowpass h[k] (unit DC gain at the upsampled rate).
  [[nodiscard]] std::vector<double> prototype() const;

 private:
  double in_rate_ = 1.0;
  double out_rate_ = 1.0;
  Rational ratio_;
  std::size_t prototype_len_ = 1;
  std::size_t phase_len_ = 1;
  std::vector<double> rev_;  // p phases of phase_len_ taps, time-reversed
};

}  // namespace specsense::dsp
