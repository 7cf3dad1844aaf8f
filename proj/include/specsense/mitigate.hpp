#pragma once

#include <vector>

#include "specsense/core.hpp"
#include "specsense/detect.hpp"

namespace specsense {

/// FIR taps plus the group delay removed when filtering.
struct FilterCoeffs {
  std::vector<Complex> taps{Complex{1.0, 0.0}};
  std::size_t delay = 0;

  /// Linear-phase convention: delay = (len - 1) / 2.
  static FilterCoeffs linear_phase(std::vector<Complex> taps);
};

/// Linear-phase complex band-stop FIR with a stopband of `stop_width_hz`
/// around every center, at least `atten_db` deep, and within +/- 0.5 dB at
/// frequencies 2 * stop_width_hz or more from any center.
FilterCoeffs design_bandstop(double rate_hz, const std::vector<double>& stop_centers_hz, double stop_width_hz,
                             double atten_db);

/// Same-length convolution with the filter's group delay trimmed.
IqBuffer apply_filter(const IqBuffer& buf, const FilterCoeffs& coeffs);

/// Segment-weighted average Welch PSD over noise-only captures.
Psd estimate_noise_psd(const std::vector<IqBuffer>& noise_bufs, const WelchConfig& cfg);

/// Bin-wise Y/W; excluded sets are merged.
Psd equalize_psd(const Psd& y_psd, const Psd& w_psd);

}  // namespace specsense
