#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "specsense/core.hpp"

namespace specsense {

struct MultipathTap {
  Complex gain{1.0, 0.0};
  std::size_t delay = 0;  // samples
};

struct ImpairmentConfig {
  double snr_db = 0.0;
  double nu_db = 0.0;
  std::vector<double> spur_offsets_hz;
  double spur_power_db = 20.0;  // relative to the noise floor
  std::optional<std::vector<double>> floor_shape;
  std::optional<std::vector<MultipathTap>> multipath_taps;
};

/// Circularly-symmetric complex Gaussian noise with E|w|^2 = power.
IqBuffer gen_awgn(std::size_t n, double power, double rate_hz, std::uint64_t seed);

/// a * signal + noise with a^2 P_sig / P_noise = 10^(snr_db/10), both powers
/// measured on the given buffers.
IqBuffer mix_at_snr(const IqBuffer& signal, const IqBuffer& noise, double snr_db);

enum class NuWorstCase { ForPfa, ForPmd };

/// Noise power at the edge of a +/- nu_db uncertainty interval.
double apply_noise_uncertainty(double nominal_power, double nu_db, NuWorstCase worst_case);

/// Adds one complex tone per offset, each with power
/// noise_floor_power * 10^(power_db_rel/10) and a seed-dependent fixed phase.
IqBuffer inject_spurs(const IqBuffer& buf, const std::vector<double>& offsets_hz, double power_db_rel,
                      double noise_floor_power, std::uint64_t seed);

/// Filters the buffer so that its PSD is multiplied by gains[m]^2 at DFT bin m
/// (FFT order, G = gains.size() bins across the sample rate).
IqBuffer shape_noise_floor(const IqBuffer& buf, const std::vector<double>& gains);

/// Per-bin amplitude gains (FFT order) whose power gain rises linearly in dB
/// from -tilt_db/2 at -rate/2 to +tilt_db/2 at +rate/2.
std::vector<double> tilt_gains(std::size_t bins, double tilt_db);

/// y[n] = sum_i gain_i x[n - delay_i], rescaled to the input's mean power.
IqBuffer apply_multipath(const IqBuffer& buf, const std::vector<MultipathTap>& taps);

}  // namespace specsense
