#include "specsense/mitigate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specsense/dsp.hpp"

namespace specsense {

FilterCoeffs FilterCoeffs::linear_phase(std::vector<Complex> taps) {
  if (taps.empty()) throw Error("filter needs at least one tap");
  FilterCoeffs c;
  c.delay = (taps.size() - 1) / 2;
  c.taps = std::move(taps);
  return c;
}

FilterCoeffs design_bandstop(double rate_hz, const std::vector<double>& stop_centers_hz, double stop_width_hz,
                             double atten_db) {
  if (!(rate_hz > 0.0)) throw Error("sample rate must be positive");
  if (stop_centers_hz.empty()) return FilterCoeffs{};
  if (!(stop_width_hz > 0.0)) throw Error("stopband width must be positive");
  if (atten_db < 40.0) throw Error("band-stop attenuation must be at least 40 dB");
  for (double c : stop_centers_hz) {
    if (std::abs(c) + stop_width_hz / 2.0 > rate_hz / 2.0) throw Error("stopband outside the Nyquist band");
  }
  // Infeasible when the stopbands jointly cover [-rate/2, rate/2).
  std::vector<std::pair<double, double>> spans;
  for (double c : stop_centers_hz) spans.emplace_back(c - stop_width_hz / 2.0, c + stop_width_hz / 2.0);
  std::sort(spans.begin(), spans.end());
  double reach = -rate_hz / 2.0;
  for (const auto& [lo, hi] : spans) {
    if (lo > reach) break;
    reach = std::max(reach, hi);
  }
  if (reach >= rate_hz / 2.0) throw Error("stopbands cover the whole band");

  // Each stopband is delta minus a modulated lowpass whose passband edge sits at
  // width/2 and whose stopband starts at 2 * width. 6 dB of design margin on
  // top of the Kaiser estimate.
  const double width = stop_width_hz / rate_hz;
  const double transition = 1.5 * width;
  const double cutoff = 0.5 * width + 0.5 * transition;
  if (!(cutoff < 0.5)) throw Error("stopband too wide for the sample rate");
  const std::vector<double> lp = dsp::design_lowpass(cutoff, transition, atten_db + 6.0);
  const std::size_t len = lp.size();
  const std::size_t mid = (len - 1) / 2;
  std::vector<Complex> taps(len, Complex{});
  taps[mid] = 1.0;
  for (double c : stop_centers_hz) {
    const double w = 2.0 * std::numbers::pi * c / rate_hz;
    for (std::size_t n = 0; n < len; ++n) {
      const double t = static_cast<double>(n) - static_cast<double>(mid);
      taps[n] -= lp[n] * std::polar(1.0, w * t);
    }
  }
  return FilterCoeffs::linear_phase(std::move(taps));
}

IqBuffer apply_filter(const IqBuffer& buf, const FilterCoeffs& coeffs) {
  if (coeffs.taps.empty()) throw Error("filter needs at least one tap");
  if (coeffs.taps.size() == 1 && coeffs.delay == 0 && coeffs.taps[0] == Complex{1.0, 0.0}) return buf;
  return IqBuffer(dsp::filter_same(buf.samples(), coeffs.taps, coeffs.delay), buf.rate());
}

Psd estimate_noise_psd(const std::vector<IqBuffer>& noise_bufs, const WelchConfig& cfg) {
  validate(cfg);
  std::size_t total = 0;
  for (const auto& b : noise_bufs) total += b.size();
  if (noise_bufs.empty() || total < 100 * cfg.m) {
    throw Error("insufficient noise data: need at least " + std::to_string(100 * cfg.m) + " samples");
  }
  std::vector<double> acc(cfg.m, 0.0);
  double weight = 0.0;
  for (const auto& b : noise_bufs) {
    if (b.size() < cfg.m) continue;
    const auto segments = static_cast<double>((b.size() - cfg.m) / cfg.d + 1);
    const Psd p = estimate_psd_welch(b, cfg);
    for (std::size_t m = 0; m < cfg.m; ++m) acc[m] += segments * p.bins[m];
    weight += segments;
  }
  Psd out;
  out.bins.resize(cfg.m);
  for (std::size_t m = 0; m < cfg.m; ++m) out.bins[m] = acc[m] / weight;
  return out;
}

Psd equalize_psd(const Psd& y_psd, const Psd& w_psd) {
  if (y_psd.bins.size() != w_psd.bins.size()) throw Error("PSD lengths differ");
  Psd out;
  out.excluded_bins = y_psd.excluded_bins;
  out.excluded_bins.insert(w_psd.excluded_bins.begin(), w_psd.excluded_bins.end());
  out.bins.resize(y_psd.bins.size());
  for (std::size_t m = 0; m < out.bins.size(); ++m) {
    const double w = w_psd.bins[m];
    if (w > 0.0) {
      out.bins[m] = y_psd.bins[m] / w;
    } else if (out.excluded_bins.count(m)) {
      out.bins[m] = 0.0;
    } else {
      throw Error("zero noise PSD bin " + std::to_string(m));
    }
  }
  return out;
}

}  // namespace specsense
