#include "specsense/impair.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "specsense/dsp.hpp"
#include "specsense/fft.hpp"

namespace specsense {

IqBuffer gen_awgn(std::size_t n, double power, double rate_hz, std::uint64_t seed) {
  if (n == 0) throw Error("noise length must be positive");
  if (power < 0.0) throw Error("noise power must be non-negative");
  std::vector<Complex> out(n);
  if (power > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(power / 2.0));
    for (auto& s : out) {
      const double re = normal(rng);
      const double im = normal(rng);
      s = {re, im};
    }
  }
  return IqBuffer(std::move(out), rate_hz);
}

IqBuffer mix_at_snr(const IqBuffer& signal, const IqBuffer& noise, double snr_db) {
  if (signal.size() != noise.size()) throw Error("signal and noise lengths differ");
  if (signal.rate() != noise.rate()) throw Error("signal and noise sample rates differ");
  const double ps = estimate_power(signal);
  const double pn = estimate_power(noise);
  if (!(ps > 0.0)) throw Error("zero-power signal");
  if (!(pn > 0.0)) throw Error("undefined SNR");
  const double a = std::sqrt(db_to_linear(snr_db) * pn / ps);
  std::vector<Complex> out(signal.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * signal[i] + noise[i];
  return IqBuffer(std::move(out), signal.rate());
}

double apply_noise_uncertainty(double nominal_power, double nu_db, NuWorstCase worst_case) {
  if (!(nominal_power > 0.0)) throw Error("nominal noise power must be positive");
  if (nu_db < 0.0) throw Error("noise uncertainty must be non-negative");
  return worst_case == NuWorstCase::ForPfa ? nominal_power * db_to_linear(nu_db)
                                           : nominal_power * db_to_linear(-nu_db);
}

IqBuffer inject_spurs(const IqBuffer& buf, const std::vector<double>& offsets_hz, double power_db_rel,
                      double noise_floor_power, std::uint64_t seed) {
  if (!(noise_floor_power > 0.0)) throw Error("noise floor power must be positive");
  for (double f : offsets_hz) {
    if (!(std::abs(f) < buf.rate() / 2.0)) throw Error("spur offset outside the Nyquist band");
  }
  std::vector<Complex> out(buf.samples().begin(), buf.samples().end());
  if (offsets_hz.empty()) return IqBuffer(std::move(out), buf.rate());
  const double amplitude = std::sqrt(noise_floor_power * db_to_linear(power_db_rel));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (double f : offsets_hz) {
    const double phi = phase(rng);
    const double w = 2.0 * std::numbers::pi * f / buf.rate();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += std::polar(amplitude, std::fmod(w * static_cast<double>(i), 2.0 * std::numbers::pi) + phi);
    }
  }
  return IqBuffer(std::move(out), buf.rate());
}

IqBuffer shape_noise_floor(const IqBuffer& buf, const std::vector<double>& gains) {
  if (gains.empty()) throw Error("gain profile is empty");
  for (double g : gains) {
    if (!(g > 0.0)) throw Error("noise floor gains must be positive");
  }
  const std::size_t g_len = gains.size();
  // Frequency sampling: the zero-phase impulse response of the gain profile,
  // rotated to be causal with a delay of g_len/2 samples.
  std::vector<Complex> spectrum(g_len), impulse(g_len);
  for (std::size_t m = 0; m < g_len; ++m) spectrum[m] = gains[m];
  fft_inverse(spectrum, impulse);
  const std::size_t delay = g_len / 2;
  std::vector<Complex> taps(g_len);
  for (std::size_t n = 0; n < g_len; ++n) taps[(n + delay) % g_len] = impulse[n] / static_cast<double>(g_len);
  return IqBuffer(dsp::filter_same(buf.samples(), taps, delay), buf.rate());
}

std::vector<double> tilt_gains(std::size_t bins, double tilt_db) {
  if (bins == 0) throw Error("gain profile needs at least one bin");
  std::vector<double> g(bins);
  for (std::size_t m = 0; m < bins; ++m) {
    const double signed_bin = m < (bins + 1) / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(bins);
    const double frac = signed_bin / static_cast<double>(bins);  // in [-0.5, 0.5)
    g[m] = std::sqrt(db_to_linear(tilt_db * frac));
  }
  return g;
}

IqBuffer apply_multipath(const IqBuffer& buf, const std::vector<MultipathTap>& taps) {
  if (taps.empty()) throw Error("multipath channel needs at least one tap");
  std::size_t max_delay = 0;
  for (const auto& t : taps) max_delay = std::max(max_delay, t.delay);
  if (max_delay >= buf.size()) throw Error("multipath delay exceeds the buffer");
  std::vector<Complex> fir(max_delay + 1);
  for (const auto& t : taps) fir[t.delay] += t.gain;
  std::vector<Complex> y = dsp::filter_same(buf.samples(), fir, 0);
  const double p_in = estimate_power(buf);
  const double p_out = estimate_power(y);
  if (p_out > 0.0) {
    const double g = std::sqrt(p_in / p_out);
    for (auto& v : y) v *= g;
  }
  return IqBuffer(std::move(y), buf.rate());
}

}  // namespace specsense
