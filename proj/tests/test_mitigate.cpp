#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "specsense/detect.hpp"
#include "specsense/impair.hpp"
#include "specsense/mitigate.hpp"

using namespace specsense;

namespace {

// |H(f)|^2 in dB of the (delay-compensated) FIR at frequency f.
double response_db(const FilterCoeffs& c, double f, double rate) {
  Complex h{};
  const double w = -2.0 * std::numbers::pi * f / rate;
  for (std::size_t n = 0; n < c.taps.size(); ++n) h += c.taps[n] * std::polar(1.0, w * static_cast<double>(n));
  return 10.0 * std::log10(std::norm(h));
}

IqBuffer tone(std::size_t n, double f, double rate) {
  std::vector<Complex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::polar(1.0, 2.0 * std::numbers::pi * f / rate * static_cast<double>(i));
  return IqBuffer(std::move(v), rate);
}

double interior_power(const IqBuffer& b, std::size_t margin) {
  return estimate_power(b.samples().subspan(margin, b.size() - 2 * margin));
}

double percentile99(std::vector<double> v) {
  const auto k = static_cast<std::ptrdiff_t>(0.99 * static_cast<double>(v.size()));
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return v[static_cast<std::size_t>(k)];
}

}  // namespace

TEST_SUITE("mitigate") {
  TEST_CASE("band-stop: identity and errors") {
    const FilterCoeffs id = design_bandstop(12.5e6, {}, 50e3, 40.0);
    CHECK(id.taps == std::vector<Complex>{Complex{1.0, 0.0}});
    CHECK(id.delay == 0);
    CHECK_THROWS_AS(design_bandstop(12.5e6, {1e6}, 50e3, 30.0), Error);
    CHECK_THROWS_AS(design_bandstop(12.5e6, {1e6}, 0.0, 40.0), Error);
    CHECK_THROWS_AS(design_bandstop(12.5e6, {6.24e6}, 50e3, 40.0), Error);
    CHECK_THROWS_AS(design_bandstop(0.0, {1e6}, 50e3, 40.0), Error);
    std::vector<double> wall;
    for (int k = -5; k < 5; ++k) wall.push_back(1.0e6 * k + 0.5e6);
    CHECK_THROWS_WITH_AS(design_bandstop(10.0e6, wall, 1.0e6, 40.0), "stopbands cover the whole band", Error);
    wall.pop_back();
    CHECK_NOTHROW(design_bandstop(10.0e6, wall, 1.0e6, 40.0));
  }

  TEST_CASE("band-stop magnitude template") {
    const double rate = 12.5e6, width = 50e3;
    for (const std::vector<double>& centers : {std::vector<double>{2.5e6}, std::vector<double>{0.0, 2.5e6}}) {
      const FilterCoeffs c = design_bandstop(rate, centers, width, 40.0);
      CHECK(c.taps.size() % 2 == 1);
      CHECK(c.delay == (c.taps.size() - 1) / 2);
      for (double fc : centers) {
        for (double df = -width / 2; df <= width / 2; df += width / 20) CHECK(response_db(c, fc + df, rate) <= -40.0);
      }
      double worst = 0.0;
      for (double f = -rate / 2; f < rate / 2; f += rate / 4096) {
        bool near = false;
        for (double fc : centers) near = near || std::abs(f - fc) < 2.0 * width;
        if (!near) worst = std::max(worst, std::abs(response_db(c, f, rate)));
      }
      CHECK(worst <= 0.5);
    }
  }

  TEST_CASE("band-stop removes an injected +2.5 MHz spur by >= 40 dB") {
    const double rate = 12.5e6;
    const FilterCoeffs c = design_bandstop(rate, {2.5e6}, 50e3, 40.0);
    const IqBuffer t = tone(200000, 2.5e6, rate);
    const IqBuffer y = apply_filter(t, c);
    const double drop_db = 10.0 * std::log10(interior_power(t, c.taps.size()) / interior_power(y, c.taps.size()));
    CHECK(drop_db >= 40.0);
    // A tone well outside the stopband passes within 0.5 dB.
    const IqBuffer p = tone(200000, 1.0e6, rate);
    const double pass_db = 10.0 * std::log10(interior_power(p, c.taps.size()) / interior_power(apply_filter(p, c), c.taps.size()));
    CHECK(std::abs(pass_db) <= 0.5);
  }

  TEST_CASE("band-stop barely moves the CP-SUM H0 99th percentile") {
    const double rate = 12.5e6;
    const FilterCoeffs c = design_bandstop(rate, {0.0, 2.5e6}, 50e3, 40.0);
    const std::size_t trials = 5000, n = 8192, n_dft = 2048;
    std::vector<double> raw(trials), filtered(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      const IqBuffer w = gen_awgn(n, 1.0, rate, derive_seed(31, {t}));
      const IqBuffer f = apply_filter(w, c);
      raw[t] = dic_normalize(cp_sum_metric(w, n_dft), estimate_power(w), 1);
      filtered[t] = dic_normalize(cp_sum_metric(f, n_dft), estimate_power(f), 1);
    }
    CHECK(percentile99(filtered) == doctest::Approx(percentile99(raw)).epsilon(0.05));
  }

  TEST_CASE("apply_filter") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<Complex> x(3000);
    for (auto& v : x) v = {g(rng), g(rng)};
    const IqBuffer b(x, 1.0);

    CHECK(apply_filter(b, FilterCoeffs{}) == b);
    CHECK(apply_filter(b, FilterCoeffs::linear_phase({0.0, 0.0, 1.0, 0.0, 0.0})) == b);
    FilterCoeffs shift;
    shift.taps = {0.0, 0.0, 0.0, 1.0};
    const IqBuffer s = apply_filter(b, shift);
    for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == Complex{});
    for (std::size_t i = 3; i < x.size(); ++i) REQUIRE(s[i] == x[i - 3]);
    CHECK_THROWS_AS(FilterCoeffs::linear_phase({}), Error);

    // Long taps take the FFT path; compare against direct convolution.
    std::vector<Complex> taps(101);
    for (auto& v : taps) v = {g(rng), g(rng)};
    const FilterCoeffs lp = FilterCoeffs::linear_phase(taps);
    const IqBuffer y = apply_filter(b, lp);
    const auto ref = oracle::convolve_same(x, taps, lp.delay);
    double peak = 0.0;
    for (const auto& v : ref) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(std::abs(y[i] - ref[i]) <= 1e-12 * peak);

    // Linearity.
    std::vector<Complex> z(3000);
    for (auto& v : z) v = {g(rng), g(rng)};
    const Complex a{0.7, -1.3};
    const double bb = 2.5;
    std::vector<Complex> mix(3000);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + bb * z[i];
    const IqBuffer fm = apply_filter(IqBuffer(mix, 1.0), lp);
    const IqBuffer fx = apply_filter(b, lp);
    const IqBuffer fz = apply_filter(IqBuffer(z, 1.0), lp);
    for (std::size_t i = 0; i < mix.size(); ++i) REQUIRE(std::abs(fm[i] - (a * fx[i] + bb * fz[i])) <= 1e-12 * 10.0 * peak);
  }

  TEST_CASE("noise PSD estimate") {
    const WelchConfig wc;
    const IqBuffer w = gen_awgn(1000000, 1.0, 12.5e6, 4);
    const Psd p = estimate_noise_psd({w}, wc);
    for (double v : p.bins) CHECK(v == doctest::Approx(1.0).epsilon(0.1));
    CHECK(p.excluded_bins.empty());

    const Psd twice = estimate_noise_psd({w, w}, wc);
    CHECK(twice.bins == p.bins);

    // Tilted floor: bin 4k sits on gain bin k of the 64-bin profile.
    const auto gains = tilt_gains(64, 3.0);
    const Psd t = estimate_noise_psd({shape_noise_floor(w, gains)}, wc);
    for (std::size_t k = 0; k < 64; ++k) {
      if (k == 31 || k == 32) continue;  // the profile wraps here
      CAPTURE(k);
      CHECK(t.bins[4 * k] == doctest::Approx(gains[k] * gains[k]).epsilon(0.1));
    }

    CHECK_THROWS_AS(estimate_noise_psd({}, wc), Error);
    CHECK_THROWS_AS(estimate_noise_psd({gen_awgn(100 * 256 - 1, 1.0, 1.0, 1)}, wc), Error);
    CHECK_NOTHROW(estimate_noise_psd({gen_awgn(100 * 256, 1.0, 1.0, 1)}, wc));
  }

  TEST_CASE("equalize_psd") {
    std::mt19937_64 rng(8);
    std::exponential_distribution<double> e;
    Psd w;
    w.bins.resize(64);
    for (auto& v : w.bins) v = 0.5 + e(rng);
    const Psd ones = equalize_psd(w, w);
    for (double v : ones.bins) CHECK(v == 1.0);
    Psd y2 = w;
    for (auto& v : y2.bins) v *= 2.0;
    for (double v : equalize_psd(y2, w).bins) CHECK(v == doctest::Approx(2.0).epsilon(1e-15));

    Psd y = w;
    y.excluded_bins = {1};
    Psd wz = w;
    wz.bins[5] = 0.0;
    CHECK_THROWS_WITH_AS(equalize_psd(y, wz), "zero noise PSD bin 5", Error);
    wz.excluded_bins = {5};
    const Psd ok = equalize_psd(y, wz);
    CHECK(ok.excluded_bins == std::set<std::size_t>{1, 5});
    CHECK(ok.bins[5] == 0.0);
    Psd short_w;
    short_w.bins.assign(32, 1.0);
    CHECK_THROWS_AS(equalize_psd(y, short_w), Error);
  }

  TEST_CASE("equalization lifts a WM tone sitting on the low side of a tilted floor") {
    const double rate = 12.5e6;
    const WelchConfig wc;
    const auto gains = tilt_gains(64, 6.0);
    const Psd w_hat = estimate_noise_psd({shape_noise_floor(gen_awgn(400000, 1.0, rate, 1), gains)}, wc);
    // Weak tone at -5 MHz (low-gain region), on a fresh noise draw.
    const IqBuffer noise = shape_noise_floor(gen_awgn(250000, 1.0, rate, 2), gains);
    const IqBuffer y = inject_spurs(noise, {-5.0e6}, 6.0, 1.0 / 256.0, 3);
    const Psd raw = estimate_psd_welch(y, wc);
    const Psd eq = equalize_psd(raw, w_hat);
    CHECK(psd_par(eq) >= psd_par(raw));
  }

  TEST_CASE("self-equalized noise PAR shrinks with averaging length") {
    const WelchConfig wc;
    const Psd w_hat = estimate_noise_psd({gen_awgn(4000000, 1.0, 1.0, 1)}, wc);
    const double par_short = psd_par(equalize_psd(estimate_psd_welch(gen_awgn(128 * 1001, 1.0, 1.0, 2), wc), w_hat));
    const double par_long = psd_par(equalize_psd(estimate_psd_welch(gen_awgn(128 * 16001, 1.0, 1.0, 3), wc), w_hat));
    CHECK(par_long < par_short);
    CHECK(par_long < 1.1);
  }
}
