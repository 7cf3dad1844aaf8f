#pragma once

#include <set>
#include <vector>

#include "specsense/core.hpp"
#include "specsense/siggen.hpp"

namespace specsense {

enum class WelchWindow { Rectangular };

struct WelchConfig {
  std::size_t m = 256;  // DFT size
  std::size_t d = 128;  // segment shift
  WelchWindow window = WelchWindow::Rectangular;
};

void validate(const WelchConfig& cfg);

struct WmThresholds {
  double phi = 2.0;  // PAR threshold
  double psi = 0.2;  // degree-of-sparsity threshold
  double rho = 0.2;  // relative level above the mean
};

/// Welch PSD estimate plus the set of bins ignored by PAR/DS.
struct Psd {
  std::vector<double> bins;
  std::set<std::size_t> excluded_bins;
};

/// r[n] = y[n] conj(y[n + lag]) for n in [0, upper).
std::vector<Complex> lag_autocorr(const IqBuffer& buf, std::size_t lag, std::size_t upper);

/// |sum_{k=1..J} R_k conj(R_{k+1})| with
/// R_k = L^{-1/2} sum_{n=0}^{(Np-k)L-1} y[n] conj(y[n+kL]).  Units V^4.
double tdsc_mrc_metric(const IqBuffer& buf, std::size_t period_len, std::size_t n_periods, std::size_t j);

/// Folds r onto one OFDM symbol:
/// R[n] = sum_{l=0}^{floor((N-n_dft+1)/(n_dft+n_cp))-1} r[n + l(n_dft+n_cp)].
std::vector<Complex> symbol_align(std::span<const Complex> r, std::size_t n_dft, std::size_t n_cp,
                                  std::size_t n_total);

/// r'[n] = sum_k r[n + k frame_len] over every complete and partial frame.
std::vector<Complex> frame_prealign(std::span<const Complex> r, std::size_t frame_len);

/// Maximum magnitude of a length-n_cp window sum over the cyclic extension of R.
double cp_sw_metric(std::span<const Complex> aligned, std::size_t n_cp);

/// (N - n_dft + 1)^{-1/2} |sum_{n=0}^{N-n_dft-1} r[n]|.  Units V^2.
double cp_sum_metric(const IqBuffer& buf, std::size_t n_dft);

/// Welch PSD with a rectangular window; segments that would overrun the
/// buffer are dropped.
Psd estimate_psd_welch(const IqBuffer& buf, const WelchConfig& cfg);

/// max / mean over the non-excluded bins.
double psd_par(const Psd& psd);

/// Fraction of bins (out of M) that are not excluded and reach (1+rho) * mean.
double psd_ds(const Psd& psd, double rho);

bool wm_detect(const Psd& psd, const WmThresholds& th);

/// Lambda / power^alpha.
double dic_normalize(double raw_metric, double est_power, int alpha);

/// TDSC-MRC parameters implied by a buffer length: Np = floor(N/L), J = Np - 2.
struct TdscParams {
  std::size_t period_len = 0;
  std::size_t n_periods = 0;
  std::size_t j = 0;
};
TdscParams tdsc_params_for(const OfdmPreset& preset, std::size_t n_samples);

/// Full CP-SW chain for a preset: lag-n_dft autocorrelation, optional
/// pre-alignment on the frame length (presets with a distinct first CP),
/// symbol alignment and the sliding-window maximum.
double cp_sw_detect(const IqBuffer& buf, const OfdmPreset& preset);

/// Raw metric of `detector` on a buffer already at the preset's native rate.
double ofdm_raw_metric(DetectorId detector, const IqBuffer& buf, const OfdmPreset& preset);

/// Bins (FFT order) within +/- halfwidth of each offset frequency.
std::set<std::size_t> spur_bins(const std::vector<double>& offsets_hz, double rate_hz, std::size_t m,
                                std::size_t halfwidth);

}  // namespace specsense
