#include "specsense/detect.hpp"

#include <cmath>

#include "specsense/fft.hpp"

namespace specsense {

void validate(const WelchConfig& cfg) {
  if (cfg.m == 0 || (cfg.m & (cfg.m - 1)) != 0) throw Error("Welch DFT size must be a power of two");
  if (cfg.d == 0 || cfg.d > cfg.m) throw Error("Welch shift must lie in (0, M]");
}

std::vector<Complex> lag_autocorr(const IqBuffer& buf, std::size_t lag, std::size_t upper) {
  if (lag == 0) throw Error("autocorrelation lag must be at least 1");
  if (upper + lag > buf.size()) throw Error("autocorrelation range exceeds the buffer");
  const auto y = buf.samples();
  std::vector<Complex> r(upper);
  for (std::size_t n = 0; n < upper; ++n) r[n] = y[n] * std::conj(y[n + lag]);
  return r;
}

double tdsc_mrc_metric(const IqBuffer& buf, std::size_t period_len, std::size_t n_periods, std::size_t j) {
  if (period_len == 0) throw Error("period length must be positive");
  if (n_periods < 3 || j < 1 || j > n_periods - 2) throw Error("J out of range: need 1 <= J <= Np - 2");
  if (buf.size() < n_periods * period_len) throw Error("buffer shorter than Np periods");
  const auto y = buf.samples();
  const double norm = 1.0 / std::sqrt(static_cast<double>(period_len));
  std::vector<Complex> corr(j + 2);
  for (std::size_t k = 1; k <= j + 1; ++k) {
    const std::size_t lag = k * period_len;
    const std::size_t count = (n_periods - k) * period_len;
    corr[k] = norm * blocked_sum<Complex>(count, [&](std::size_t n) { return y[n] * std::conj(y[n + lag]); });
  }
  Complex acc{};
  for (std::size_t k = 1; k <= j; ++k) acc += corr[k] * std::conj(corr[k + 1]);
  return std::abs(acc);
}

std::vector<Complex> symbol_align(std::span<const Complex> r, std::size_t n_dft, std::size_t n_cp,
                                  std::size_t n_total) {
  const std::size_t sym = n_dft + n_cp;
  if (n_dft == 0 || sym == 0) throw Error("invalid symbol layout");
  const std::size_t count = n_total + 1 >= n_dft ? (n_total - n_dft + 1) / sym : 0;
  if (count == 0) throw Error("insufficient length for symbol alignment");
  if (count * sym > r.size()) throw Error("insufficient length for symbol alignment");
  std::vector<Complex> out(sym);
  for (std::size_t n = 0; n < sym; ++n) {
    Complex acc{};
    for (std::size_t l = 0; l < count; ++l) acc += r[n + l * sym];
    out[n] = acc;
  }
  return out;
}

std::vector<Complex> frame_prealign(std::span<const Complex> r, std::size_t frame_len) {
  if (frame_len == 0) throw Error("frame length must be positive");
  if (r.size() < frame_len) throw Error("autocorrelation shorter than one frame");
  std::vector<Complex> out(frame_len);
  for (std::size_t n = 0; n < frame_len; ++n) {
    Complex acc{};
    for (std::size_t idx = n; idx < r.size(); idx += frame_len) acc += r[idx];
    out[n] = acc;
  }
  return out;
}

double cp_sw_metric(std::span<const Complex> aligned, std::size_t n_cp) {
  const std::size_t len = aligned.size();
  if (n_cp == 0 || n_cp >= len) throw Error("CP window must be shorter than the aligned sequence");
  Complex window{};
  for (std::size_t n = 0; n < n_cp; ++n) window += aligned[n];
  double best = std::abs(window);
  for (std::size_t i = 1; i < len; ++i) {
    window += aligned[(i + n_cp - 1) % len] - aligned[i - 1];
    best = std::max(best, std::abs(window));
  }
  return best;
}

double cp_sum_metric(const IqBuffer& buf, std::size_t n_dft) {
  const std::size_t n = buf.size();
  if (n <= n_dft) throw Error("buffer must be longer than the DFT size");
  const auto y = buf.samples();
  const Complex sum = blocked_sum<Complex>(n - n_dft, [&](std::size_t i) { return y[i] * std::conj(y[i + n_dft]); });
  return std::abs(sum) / std::sqrt(static_cast<double>(n - n_dft + 1));
}

Psd estimate_psd_welch(const IqBuffer& buf, const WelchConfig& cfg) {
  validate(cfg);
  const std::size_t n = buf.size();
  if (n < cfg.m) throw Error("buffer shorter than the Welch DFT size");
  const std::size_t segments = (n - cfg.m) / cfg.d + 1;
  const auto y = buf.samples();
  std::vector<Complex> seg(cfg.m), spec(cfg.m);
  std::vector<double> acc(cfg.m, 0.0);
  for (std::size_t i = 0; i < segments; ++i) {
    std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(i * cfg.d), cfg.m, seg.begin());
    fft_forward(seg, spec);
    for (std::size_t m = 0; m < cfg.m; ++m) acc[m] += std::norm(spec[m]);
  }
  // Rectangular window: sum v^2 = M.
  const double denom = static_cast<double>(segments) * static_cast<double>(cfg.m);
  Psd psd;
  psd.bins.resize(cfg.m);
  for (std::size_t m = 0; m < cfg.m; ++m) psd.bins[m] = acc[m] / denom;
  return psd;
}

namespace {
double included_mean(const Psd& psd, std::size_t* count_out = nullptr) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < psd.bins.size(); ++m) {
    if (psd.excluded_bins.count(m)) continue;
    sum += psd.bins[m];
    ++count;
  }
  if (count == 0) throw Error("every PSD bin is excluded");
  const double mean = sum / static_cast<double>(count);
  if (!(mean > 0.0)) throw Error("PSD mean is zero");
  if (count_out) *count_out = count;
  return mean;
}
}  // namespace

double psd_par(const Psd& psd) {
  const double mean = included_mean(psd);
  double peak = 0.0;
  for (std::size_t m = 0; m < psd.bins.size(); ++m) {
    if (!psd.excluded_bins.count(m)) peak = std::max(peak, psd.bins[m]);
  }
  return peak / mean;
}

double psd_ds(const Psd& psd, double rho) {
  const double mean = included_mean(psd);
  const double level = (1.0 + rho) * mean;
  std::size_t above = 0;
  for (std::size_t m = 0; m < psd.bins.size(); ++m) {
    if (!psd.excluded_bins.count(m) && psd.bins[m] >= level) ++above;
  }
  return static_cast<double>(above) / static_cast<double>(psd.bins.size());
}

bool wm_detect(const Psd& psd, const WmThresholds& th) {
  return psd_par(psd) >= th.phi && psd_ds(psd, th.rho) <= th.psi;
}

double dic_normalize(double raw_metric, double est_power, int alpha) {
  if (!(est_power > 0.0)) throw Error("estimated power must be positive");
  return raw_metric / std::pow(est_power, alpha);
}

TdscParams tdsc_params_for(const OfdmPreset& preset, std::size_t n_samples) {
  if (!preset.pilot_period) throw Error("preset '" + preset.name + "' has no pilot period");
  TdscParams p;
  p.period_len = *preset.pilot_period;
  p.n_periods = n_samples / p.period_len;
  if (p.n_periods < 3) throw Error("observation too short for TDSC-MRC on '" + preset.name + "'");
  p.j = p.n_periods - 2;
  return p;
}

double cp_sw_detect(const IqBuffer& buf, const OfdmPreset& preset) {
  const std::size_t n = buf.size();
  if (n <= preset.n_dft + preset.symbol_len()) throw Error("buffer too short for CP-SW");
  const std::vector<Complex> r = lag_autocorr(buf, preset.n_dft, n - preset.n_dft);
  if (preset.n_cp_first && *preset.n_cp_first != preset.n_cp) {
    const std::vector<Complex> folded = frame_prealign(r, preset.frame_len);
    // The folded frame acts as an autocorrelation of frame_len + n_dft - 1 samples.
    const auto aligned = symbol_align(folded, preset.n_dft, preset.n_cp, preset.frame_len + preset.n_dft - 1);
    return cp_sw_metric(aligned, preset.n_cp);
  }
  // r holds N - n_dft values while the fold bound counts N - n_dft + 1, so the
  // last symbol is dropped when the two disagree.
  const std::size_t sym = preset.symbol_len();
  std::size_t n_total = n;
  if (((n - preset.n_dft + 1) / sym) * sym > r.size()) n_total = r.size() + preset.n_dft - 1;
  return cp_sw_metric(symbol_align(r, preset.n_dft, preset.n_cp, n_total), preset.n_cp);
}

double ofdm_raw_metric(DetectorId detector, const IqBuffer& buf, const OfdmPreset& preset) {
  switch (detector) {
    case DetectorId::TdscMrc: {
      const TdscParams p = tdsc_params_for(preset, buf.size());
      return tdsc_mrc_metric(buf, p.period_len, p.n_periods, p.j);
    }
    case DetectorId::CpSw: return cp_sw_detect(buf, preset);
    case DetectorId::CpSum: return cp_sum_metric(buf, preset.n_dft);
    case DetectorId::WmParDs: break;
  }
  throw Error("detector is not an OFDM detector");
}

std::set<std::size_t> spur_bins(const std::vector<double>& offsets_hz, double rate_hz, std::size_t m,
                                std::size_t halfwidth) {
  std::set<std::size_t> out;
  const auto mm = static_cast<std::ptrdiff_t>(m);
  for (double f : offsets_hz) {
    const auto center = static_cast<std::ptrdiff_t>(std::lround(f / rate_hz * static_cast<double>(m)));
    for (std::ptrdiff_t k = -static_cast<std::ptrdiff_t>(halfwidth); k <= static_cast<std::ptrdiff_t>(halfwidth); ++k) {
      out.insert(static_cast<std::size_t>((((center + k) % mm) + mm) % mm));
    }
  }
  return out;
}

}  // namespace specsense
