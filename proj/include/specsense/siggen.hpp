#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specsense/core.hpp"

namespace specsense {

/// Structural parameters of one OFDM mode. Lengths are in samples at
/// `native_rate_hz`.
struct OfdmPreset {
  std::string name;
  ClassKind kind = ClassKind::DvbT;
  std::size_t n_dft = 0;
  std::size_t n_cp = 0;
  std::optional<std::size_t> n_cp_first;  // first symbol of a slot, when longer
  std::size_t symbols_per_frame = 1;
  std::size_t frame_len = 0;                // derived, see finalize_preset()
  std::optional<std::size_t> pilot_period;  // samples; scattered-pilot cycle
  std::size_t n_used = 0;                   // active subcarriers
  bool dc_null = false;
  double native_rate_hz = 0.0;
  double duty_cycle = 1.0;
  double mean_burst_symbols = 4.0;  // bursty presets only

  [[nodiscard]] std::size_t symbol_len() const { return n_dft + n_cp; }
  [[nodiscard]] double occupied_bandwidth_hz() const {
    return native_rate_hz * static_cast<double>(n_used) / static_cast<double>(n_dft);
  }
};

/// Fills frame_len from the symbol layout and checks every invariant.
OfdmPreset finalize_preset(OfdmPreset preset);

/// DVB-T (8 modes), LTE 5 MHz (normal/extended CP), 802.22 and ECMA-392.
std::vector<OfdmPreset> default_presets();

const OfdmPreset& find_preset(const std::vector<OfdmPreset>& presets, const std::string& name);

struct WmParams {
  double carrier_offset_hz = 1.0e6;
  double audio_tone_hz = 1.0e3;
  double fm_deviation_hz = 50.0e3;
};

/// Bandwidth holding 99% of the power of a sinusoidally modulated FM carrier
/// (Bessel line sum).
double fm_occupied_bandwidth_hz(const WmParams& params);

/// Continuous OFDM with DVB-T-like scattered pilots (4-symbol cycle) and
/// continual pilots.
IqBuffer gen_pilot_ofdm(const OfdmPreset& preset, double duration_s, std::uint64_t seed);

/// Slot-periodic OFDM where the first symbol of a slot may carry a longer CP.
IqBuffer gen_lte_slots(const OfdmPreset& preset, double duration_s, std::uint64_t seed);

/// OFDM bursts with random lengths and positions; zero samples between bursts.
IqBuffer gen_burst_ofdm(const OfdmPreset& preset, double duration_s, std::uint64_t seed);

/// Constant-envelope FM carrier modulated by a single audio tone.
IqBuffer gen_fm_wm(const WmParams& params, double duration_s, double rate_hz, std::uint64_t seed);

/// Dispatches on preset.kind.
IqBuffer generate(const OfdmPreset& preset, double duration_s, std::uint64_t seed);

/// Carrier indices (0-based within the active band) of the continual pilots.
std::vector<std::size_t> continual_pilot_carriers(std::size_t n_used);

}  // namespace specsense
