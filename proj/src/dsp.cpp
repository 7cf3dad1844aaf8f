#include "specsense/dsp.hpp"

#include <cmath>
#include <numbers>

#include "specsense/fft.hpp"

namespace specsense::dsp {

double kaiser_beta(double atten_db) {
  if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
  if (atten_db >= 21.0) return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
  return 0.0;
}

std::size_t kaiser_length(double atten_db, double transition) {
  if (!(transition > 0.0)) throw Error("transition width must be positive");
  const double n = (atten_db - 7.95) / (14.36 * transition);
  auto len = static_cast<std::size_t>(std::ceil(std::max(n, 1.0))) + 1;
  if (len % 2 == 0) ++len;
  return len;
}

std::vector<double> design_lowpass(double cutoff, double transition, double atten_db) {
  if (!(cutoff > 0.0 && cutoff < 0.5)) throw Error("lowpass cutoff must lie in (0, 0.5) cycles/sample");
  const std::size_t len = kaiser_length(atten_db, transition);
  const double beta = kaiser_beta(atten_db);
  const double mid = static_cast<double>(len - 1) / 2.0;
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  std::vector<double> h(len);
  double dc = 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    const double t = static_cast<double>(n) - mid;
    const double sinc = t == 0.0 ? 2.0 * cutoff : std::sin(2.0 * std::numbers::pi * cutoff * t) / (std::numbers::pi * t);
    const double ratio = t / mid;
    const double w = mid > 0.0 ? std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) / i0_beta : 1.0;
    h[n] = sinc * w;
    dc += h[n];
  }
  for (auto& v : h) v /= dc;
  return h;
}

std::vector<Complex> filter_same_direct(std::span<const Complex> x, std::span<const Complex> taps,
                                        std::size_t delay) {
  if (taps.empty()) throw Error("filter needs at least one tap");
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<Complex> y(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t c = i + static_cast<std::ptrdiff_t>(delay);
    Complex acc{};
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const std::ptrdiff_t idx = c - static_cast<std::ptrdiff_t>(k);
      if (idx >= 0 && idx < n) acc += taps[k] * x[static_cast<std::size_t>(idx)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

std::vector<Complex> filter_same(std::span<const Complex> x, std::span<const Complex> taps, std::size_t delay) {
  if (taps.empty()) throw Error("filter needs at least one tap");
  if (taps.size() <= 32 || x.size() < 4 * taps.size()) return filter_same_direct(x, taps, delay);

  std::size_t nfft = 1024;
  while (nfft < 4 * taps.size()) nfft *= 2;
  const std::size_t overlap = taps.size() - 1;
  const std::size_t step = nfft - overlap;

  std::vector<Complex> h(nfft), hf(nfft);
  std::copy(taps.begin(), taps.end(), h.begin());
  fft_forward(h, hf);

  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<Complex> y(x.size());
  std::vector<Complex> block(nfft), spec(nfft), out(nfft);
  const double inv = 1.0 / static_cast<double>(nfft);
  // Output block covers full-convolution indices [s, s + step).
  for (std::size_t produced = 0; produced < x.size(); produced += step) {
    const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(produced + delay);
    const std::ptrdiff_t first = s - static_cast<std::ptrdiff_t>(overlap);
    for (std::size_t i = 0; i < nfft; ++i) {
      const std::ptrdiff_t idx = first + static_cast<std::ptrdiff_t>(i);
      block[i] = (idx >= 0 && idx < n) ? x[static_cast<std::size_t>(idx)] : Complex{};
    }
    fft_forward(block, spec);
    for (std::size_t i = 0; i < nfft; ++i) spec[i] *= hf[i];
    fft_inverse(spec, out);
    const std::size_t count = std::min(step, x.size() - produced);
    for (std::size_t i = 0; i < count; ++i) y[produced + i] = out[overlap + i] * inv;
  }
  return y;
}

Rational rational_ratio(double ratio, std::uint64_t max_denominator) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw Error("resampling ratio must be positive");
  // Continued-fraction convergents.
  std::uint64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double x = ratio;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    const auto ai = static_cast<std::uint64_t>(a);
    const std::uint64_t p2 = ai * p1 + p0;
    const std::uint64_t q2 = ai * q1 + q0;
    if (q2 > max_denominator) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double approx = static_cast<double>(p1) / static_cast<double>(q1);
    if (std::abs(approx - ratio) <= 1e-12 * ratio) return {p1, q1};
    const double frac = x - a;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  throw Error("unachievable rational resampling ratio " + std::to_string(ratio) + " with denominator <= " +
              std::to_string(max_denominator));
}

Resampler::Resampler(double in_rate_hz, double out_rate_hz, std::uint64_t max_denominator, double atten_db,
                     double transition_fraction)
    : in_rate_(in_rate_hz), out_rate_(out_rate_hz) {
  if (!(in_rate_hz > 0.0) || !(out_rate_hz > 0.0)) throw Error("resampler rates must be positive");
  ratio_ = rational_ratio(out_rate_hz / in_rate_hz, max_denominator);
  const auto p = ratio_.p;
  if (p == 1 && ratio_.q == 1) {
    phase_len_ = 1;
    rev_ = {1.0};
    return;
  }
  const double up_rate = in_rate_hz * static_cast<double>(p);
  const double low_rate = std::min(in_rate_hz, out_rate_hz);
  const double cutoff = 0.5 * low_rate / up_rate;
  const double transition = transition_fraction * low_rate / up_rate;
  std::vector<double> h = design_lowpass(cutoff, transition, atten_db);
  prototype_len_ = h.size();
  // Phase r holds p * h[r + j p]; stored time-reversed and zero-padded to a
  // common length so each output is a forward dot product.
  phase_len_ = (h.size() + p - 1) / p;
  rev_.assign(p * phase_len_, 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const std::size_t r = k % p;
    const std::size_t j = k / p;
    rev_[r * phase_len_ + (phase_len_ - 1 - j)] = h[k] * static_cast<double>(p);
  }
}

std::vector<double> Resampler::prototype() const {
  const auto p = ratio_.p;
  std::vector<double> h(prototype_len_);
  for (std::size_t k = 0; k < prototype_len_; ++k) {
    h[k] = rev_[(k % p) * phase_len_ + (phase_len_ - 1 - k / p)] / static_cast<double>(p);
  }
  return h;
}

IqBuffer Resampler::process(const IqBuffer& in) const {
  const auto p = ratio_.p;
  const auto q = ratio_.q;
  if (p == 1 && q == 1) return in;
  const auto x = in.samples();
  const std::size_t n_in = x.size();
  const std::size_t n_out = static_cast<std::size_t>((static_cast<unsigned __int128>(n_in) * p) / q);
  const std::uint64_t delay = (prototype_len_ - 1) / 2;
  const std::size_t len = phase_len_;
  // Split real/imag planes with len zeros on both sides; x[i] sits at i + len.
  const std::size_t pad = 2 * len + (delay / p) + 2;
  std::vector<double> xr(n_in + 2 * pad, 0.0), xi(n_in + 2 * pad, 0.0);
  for (std::size_t i = 0; i < n_in; ++i) {
    xr[len + i] = x[i].real();
    xi[len + i] = x[i].imag();
  }
  std::vector<Complex> y(n_out);
  for (std::size_t m = 0; m < n_out; ++m) {
    const std::uint64_t t = static_cast<std::uint64_t>(m) * q + delay;
    const std::size_t r = t % p;
    const std::size_t b = t / p;
    // Output m = sum_j phase_r[j] x[b - j] = sum_k rev[k] x[b - len + 1 + k].
    const double* h = rev_.data() + r * len;
    const double* ar = xr.data() + b + 1;
    const double* ai = xi.data() + b + 1;
    double r0 = 0.0, r1 = 0.0, i0 = 0.0, i1 = 0.0;
    std::size_t k = 0;
    for (; k + 1 < len; k += 2) {
      r0 += h[k] * ar[k];
      i0 += h[k] * ai[k];
      r1 += h[k + 1] * ar[k + 1];
      i1 += h[k + 1] * ai[k + 1];
    }
    if (k < len) {
      r0 += h[k] * ar[k];
      i0 += h[k] * ai[k];
    }
    y[m] = {r0 + r1, i0 + i1};
  }
  return IqBuffer(std::move(y), out_rate_);
}

}  // namespace specsense::dsp
