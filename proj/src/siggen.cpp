#include "specsense/siggen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "specsense/fft.hpp"

namespace specsense {

namespace {

constexpr double kDvbtRate = 64.0e6 / 7.0;

OfdmPreset dvbt(std::size_t n_dft, std::size_t cp_div) {
  OfdmPreset p;
  p.name = std::string("dvbt-") + (n_dft == 2048 ? "2k" : "8k") + "-cp1/" + std::to_string(cp_div);
  p.kind = ClassKind::DvbT;
  p.n_dft = n_dft;
  p.n_cp = n_dft / cp_div;
  p.n_used = n_dft == 2048 ? 1705 : 6817;
  p.native_rate_hz = kDvbtRate;
  p.pilot_period = 4 * (p.n_dft + p.n_cp);
  return finalize_preset(p);
}

std::size_t samples_for(double duration_s, double rate_hz) {
  if (!(duration_s > 0.0)) throw Error("duration must be positive");
  return static_cast<std::size_t>(std::floor(duration_s * rate_hz + 1e-9));
}

// Maps active carrier k in [0, n_used) to a DFT bin, centering the band on DC.
std::size_t carrier_bin(const OfdmPreset& p, std::size_t k) {
  const auto half = static_cast<std::ptrdiff_t>(p.n_used / 2);
  std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(k) - half;
  if (p.dc_null && offset >= 0) offset += 1;
  const auto n = static_cast<std::ptrdiff_t>(p.n_dft);
  return static_cast<std::size_t>(((offset % n) + n) % n);
}

Complex qpsk(std::mt19937_64& rng) {
  const std::uint64_t bits = rng();
  const double a = std::numbers::sqrt2 / 2.0;
  return {(bits & 1U) ? a : -a, (bits & 2U) ? a : -a};
}

// Time-domain symbol (CP + body) from a frequency-domain vector, scaled to
// unit mean power over the body.
void append_symbol(std::vector<Complex>& out, std::vector<Complex>& freq, std::size_t n_cp) {
  double energy = 0.0;
  for (const auto& v : freq) energy += std::norm(v);
  std::vector<Complex> body(freq.size());
  fft_inverse(freq, body);
  const double g = energy > 0.0 ? 1.0 / std::sqrt(energy) : 0.0;
  for (auto& v : body) v *= g;
  out.insert(out.end(), body.end() - static_cast<std::ptrdiff_t>(n_cp), body.end());
  out.insert(out.end(), body.begin(), body.end());
}

void random_data_symbol(const OfdmPreset& p, std::mt19937_64& rng, std::vector<Complex>& freq) {
  std::fill(freq.begin(), freq.end(), Complex{});
  for (std::size_t k = 0; k < p.n_used; ++k) freq[carrier_bin(p, k)] = qpsk(rng);
}

// Pilot reference sequence: PRBS with generator x^11 + x^2 + 1, register
// initialised to all ones; one output bit per carrier.
std::vector<int> pilot_prbs(std::size_t n) {
  std::vector<int> out(n);
  unsigned reg = 0x7FF;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned bit = ((reg >> 10) ^ (reg >> 1)) & 1U;
    out[i] = static_cast<int>(reg & 1U);
    reg = ((reg << 1) | bit) & 0x7FF;
  }
  return out;
}

IqBuffer finish(std::vector<Complex> stream, std::size_t offset, std::size_t n, double rate) {
  if (stream.size() < offset + n) throw Error("generator produced too few samples");
  std::vector<Complex> out(stream.begin() + static_cast<std::ptrdiff_t>(offset),
                           stream.begin() + static_cast<std::ptrdiff_t>(offset + n));
  return IqBuffer(std::move(out), rate);
}

}  // namespace

OfdmPreset finalize_preset(OfdmPreset p) {
  if (p.n_dft == 0 || p.n_cp == 0) throw Error("preset '" + p.name + "': n_dft and n_cp must be positive");
  if (p.n_cp >= p.n_dft) throw Error("preset '" + p.name + "': n_cp must be smaller than n_dft");
  if (p.n_cp_first && (*p.n_cp_first == 0 || *p.n_cp_first >= p.n_dft)) {
    throw Error("preset '" + p.name + "': invalid n_cp_first");
  }
  if (p.symbols_per_frame == 0) throw Error("preset '" + p.name + "': symbols_per_frame must be positive");
  if (p.n_used == 0 || p.n_used + (p.dc_null ? 1 : 0) > p.n_dft) {
    throw Error("preset '" + p.name + "': active carriers do not fit the DFT");
  }
  if (!(p.native_rate_hz > 0.0)) throw Error("preset '" + p.name + "': native rate must be positive");
  if (!(p.duty_cycle > 0.0 && p.duty_cycle <= 1.0)) throw Error("preset '" + p.name + "': duty cycle must be in (0,1]");
  if (p.pilot_period && *p.pilot_period % p.symbol_len() != 0) {
    throw Error("preset '" + p.name + "': pilot period must be a multiple of the symbol length");
  }
  const std::size_t first_cp = p.n_cp_first.value_or(p.n_cp);
  p.frame_len = (first_cp + p.n_dft) + (p.symbols_per_frame - 1) * p.symbol_len();
  return p;
}

std::vector<OfdmPreset> default_presets() {
  std::vector<OfdmPreset> out;
  for (std::size_t n_dft : {2048U, 8192U}) {
    for (std::size_t div : {4U, 8U, 16U, 32U}) out.push_back(dvbt(n_dft, div));
  }

  OfdmPreset lte;
  lte.kind = ClassKind::LteDl;
  lte.n_dft = 512;
  lte.n_used = 300;
  lte.dc_null = true;
  lte.native_rate_hz = 7.68e6;

  OfdmPreset normal = lte;
  normal.name = "lte-5mhz-normal";
  normal.n_cp = 36;
  normal.n_cp_first = 40;
  normal.symbols_per_frame = 7;
  out.push_back(finalize_preset(normal));

  OfdmPreset extended = lte;
  extended.name = "lte-5mhz-extended";
  extended.n_cp = 128;
  extended.symbols_per_frame = 6;
  out.push_back(finalize_preset(extended));

  OfdmPreset wran;
  wran.name = "wran-8mhz-cp1/16";
  wran.kind = ClassKind::Wran;
  wran.n_dft = 2048;
  wran.n_cp = 128;
  wran.n_used = 1680;
  wran.native_rate_hz = kDvbtRate;
  out.push_back(finalize_preset(wran));

  OfdmPreset ecma;
  ecma.name = "ecma392-8mhz-cp1/16";
  ecma.kind = ClassKind::Ecma;
  ecma.n_dft = 128;
  ecma.n_cp = 8;
  ecma.n_used = 110;
  ecma.dc_null = true;
  ecma.native_rate_hz = kDvbtRate;
  ecma.duty_cycle = 0.5;
  out.push_back(finalize_preset(ecma));
  return out;
}

const OfdmPreset& find_preset(const std::vector<OfdmPreset>& presets, const std::string& name) {
  for (const auto& p : presets) {
    if (p.name == name) return p;
  }
  throw Error("unknown preset '" + name + "'");
}

std::vector<std::size_t> continual_pilot_carriers(std::size_t n_used) {
  // 45 continual pilots per 1705 carriers, drawn once from a fixed stream.
  const auto count = static_cast<std::size_t>(std::lround(static_cast<double>(n_used) * 45.0 / 1705.0));
  std::mt19937_64 rng(0xD1B54A32D192ED03ULL ^ n_used);
  std::vector<std::size_t> all(n_used);
  for (std::size_t i = 0; i < n_used; ++i) all[i] = i;
  for (std::size_t i = 0; i < count && i < n_used; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_used - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(std::min(count, n_used));
  std::sort(all.begin(), all.end());
  return all;
}

IqBuffer gen_pilot_ofdm(const OfdmPreset& p, double duration_s, std::uint64_t seed) {
  if (!p.pilot_period) throw Error("preset '" + p.name + "' has no pilot period");
  const std::size_t n = samples_for(duration_s, p.native_rate_hz);
  if (n < 2 * *p.pilot_period) throw Error("insufficient observation");

  std::mt19937_64 rng(seed);
  const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, *p.pilot_period - 1)(rng);
  const std::vector<int> prbs = pilot_prbs(p.n_used);
  std::vector<bool> continual(p.n_used, false);
  for (auto k : continual_pilot_carriers(p.n_used)) continual[k] = true;
  const double boost = 4.0 / 3.0;
  auto pilot = [&](std::size_t k) { return Complex{boost * 2.0 * (0.5 - prbs[k]), 0.0}; };

  std::vector<Complex> stream;
  stream.reserve(n + offset + p.symbol_len());
  std::vector<Complex> freq(p.n_dft);
  for (std::size_t l = 0; stream.size() < n + offset; ++l) {
    random_data_symbol(p, rng, freq);
    const std::size_t shift = 3 * (l % 4);
    for (std::size_t k = shift; k < p.n_used; k += 12) freq[carrier_bin(p, k)] = pilot(k);
    for (std::size_t k = 0; k < p.n_used; ++k) {
      if (continual[k]) freq[carrier_bin(p, k)] = pilot(k);
    }
    append_symbol(stream, freq, p.n_cp);
  }
  return finish(std::move(stream), offset, n, p.native_rate_hz);
}

IqBuffer gen_lte_slots(const OfdmPreset& p, double duration_s, std::uint64_t seed) {
  const std::size_t n = samples_for(duration_s, p.native_rate_hz);
  if (n < 2 * p.frame_len) throw Error("insufficient observation");
  std::mt19937_64 rng(seed);
  const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, p.frame_len - 1)(rng);
  std::vector<Complex> stream;
  stream.reserve(n + offset + p.frame_len);
  std::vector<Complex> freq(p.n_dft);
  for (std::size_t l = 0; stream.size() < n + offset; ++l) {
    random_data_symbol(p, rng, freq);
    const bool first = l % p.symbols_per_frame == 0;
    append_symbol(stream, freq, first ? p.n_cp_first.value_or(p.n_cp) : p.n_cp);
  }
  return finish(std::move(stream), offset, n, p.native_rate_hz);
}

IqBuffer gen_burst_ofdm(const OfdmPreset& p, double duration_s, std::uint64_t seed) {
  if (!(p.duty_cycle > 0.0 && p.duty_cycle <= 1.0)) throw Error("duty cycle must be in (0,1]");
  const std::size_t n = samples_for(duration_s, p.native_rate_hz);
  if (n == 0) throw Error("insufficient observation");
  std::mt19937_64 rng(seed);
  std::vector<Complex> freq(p.n_dft);
  const std::size_t sym = p.symbol_len();

  if (p.duty_cycle >= 1.0) {
    const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, sym - 1)(rng);
    std::vector<Complex> stream;
    stream.reserve(n + offset + sym);
    while (stream.size() < n + offset) {
      random_data_symbol(p, rng, freq);
      append_symbol(stream, freq, p.n_cp);
    }
    return finish(std::move(stream), offset, n, p.native_rate_hz);
  }

  // Burst lengths (in symbols) are 1 + geometric; gap lengths are exponential
  // weights rescaled so that the realised on-fraction equals the duty cycle.
  const double d = p.duty_cycle;
  const double target = d * static_cast<double>(n) * 1.1 + static_cast<double>(sym) * 2.0 * p.mean_burst_symbols;
  std::geometric_distribution<std::size_t> extra(1.0 / std::max(1.0, p.mean_burst_symbols));
  std::exponential_distribution<double> expo(1.0);
  std::vector<std::size_t> bursts;
  std::vector<double> weights;
  double on_total = 0.0;
  while (on_total < target) {
    bursts.push_back(1 + extra(rng));
    weights.push_back(expo(rng));
    on_total += static_cast<double>(bursts.back() * sym);
  }
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  const double gap_total = on_total * (1.0 - d) / d;

  std::vector<Complex> stream;
  double gap_carry = 0.0;
  for (std::size_t b = 0; b < bursts.size(); ++b) {
    for (std::size_t s = 0; s < bursts[b]; ++s) {
      random_data_symbol(p, rng, freq);
      append_symbol(stream, freq, p.n_cp);
    }
    gap_carry += gap_total * weights[b] / weight_sum;
    const auto gap = static_cast<std::size_t>(std::floor(gap_carry));
    gap_carry -= static_cast<double>(gap);
    stream.insert(stream.end(), gap, Complex{});
  }
  const std::size_t span = stream.size() > n ? stream.size() - n : 0;
  const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, span)(rng);
  return finish(std::move(stream), offset, n, p.native_rate_hz);
}

double fm_occupied_bandwidth_hz(const WmParams& params) {
  if (!(params.audio_tone_hz > 0.0)) throw Error("audio tone must be positive");
  if (params.fm_deviation_hz < 0.0) throw Error("FM deviation must be non-negative");
  const double beta = params.fm_deviation_hz / params.audio_tone_hz;
  double power = std::pow(std::cyl_bessel_j(0.0, beta), 2.0);
  int k = 0;
  while (power < 0.99 && k < 100000) {
    ++k;
    power += 2.0 * std::pow(std::cyl_bessel_j(static_cast<double>(k), beta), 2.0);
  }
  return 2.0 * static_cast<double>(k) * params.audio_tone_hz;
}

IqBuffer gen_fm_wm(const WmParams& params, double duration_s, double rate_hz, std::uint64_t seed) {
  if (!(rate_hz > 0.0)) throw Error("sample rate must be positive");
  if (!(params.audio_tone_hz > 0.0) || !(params.fm_deviation_hz >= 0.0)) throw Error("invalid FM parameters");
  const double span = std::abs(params.carrier_offset_hz) + params.fm_deviation_hz + params.audio_tone_hz;
  if (!(rate_hz > 2.0 * span)) throw Error("FM signal does not fit the sample rate");
  if (fm_occupied_bandwidth_hz(params) >= 200.0e3) throw Error("FM occupied bandwidth must stay below 200 kHz");

  const std::size_t n = samples_for(duration_s, rate_hz);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double audio_phase = phase(rng);
  const double carrier_phase = phase(rng);
  const double beta = params.fm_deviation_hz / params.audio_tone_hz;
  const double wc = 2.0 * std::numbers::pi * params.carrier_offset_hz / rate_hz;
  const double wa = 2.0 * std::numbers::pi * params.audio_tone_hz / rate_hz;
  std::vector<Complex> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    // Reduce the carrier phase modulo 2 pi per sample index to stay accurate
    // over long buffers.
    const double theta = std::fmod(wc * t, 2.0 * std::numbers::pi) + beta * std::sin(std::fmod(wa * t, 2.0 * std::numbers::pi) + audio_phase) +
                         carrier_phase;
    out[i] = std::polar(1.0, theta);
  }
  return IqBuffer(std::move(out), rate_hz);
}

IqBuffer generate(const OfdmPreset& preset, double duration_s, std::uint64_t seed) {
  switch (preset.kind) {
    case ClassKind::DvbT: return gen_pilot_ofdm(preset, duration_s, seed);
    case ClassKind::LteDl: return gen_lte_slots(preset, duration_s, seed);
    case ClassKind::Wran:
    case ClassKind::Ecma: return gen_burst_ofdm(preset, duration_s, seed);
    default: break;
  }
  throw Error("preset '" + preset.name + "' is not an OFDM class");
}

}  // namespace specsense
