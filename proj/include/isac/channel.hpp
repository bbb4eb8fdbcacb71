#pragma once

// Communication (Rician + cross-polarization + AWGN) and monostatic radar
// echo channels. Everything here is deterministic given the seeds.

#include "isac/dsp.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace isac {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct CommChannelConfig {
  double k_factor_db = 3.0;  // +inf gives a pure LOS channel
  int nlos_path_count = 4;
  double nlos_max_delay = 2e-6;
  std::vector<double> nlos_delays;    // drawn per frame when empty
  std::vector<double> nlos_dopplers;  // drawn per frame when empty
  double los_delay = 0.0;
  double los_doppler = 0.0;
  double crosspol_leakage_db = -14.0;  // -inf removes leakage
  double snr_db = kInf;
  double carrier_freq = 0.0;

  void validate(double chirp_duration) const;
};

struct ChannelRealization {
  cdouble los_gain_v{1, 0};
  cdouble los_gain_h{1, 0};
  CVec nlos_gains_v;
  CVec nlos_gains_h;
  std::vector<double> nlos_delays;
  std::vector<double> nlos_dopplers;
  cdouble crosspol_hv{0, 0};  // H stream leaking into V
  cdouble crosspol_vh{0, 0};  // V stream leaking into H
  std::uint64_t rng_seed = 0;
};

ChannelRealization draw_realization(const CommChannelConfig& cfg, std::uint64_t seed);

// Unit LOS gains, no NLOS paths, no leakage.
ChannelRealization identity_realization(const CommChannelConfig& cfg);

struct CommChannelOutput {
  IqBuffer rx_v;
  IqBuffer rx_h;
  double noise_var_v = 0;
  double noise_var_h = 0;
  double interference_var_v = 0;
  double interference_var_h = 0;
};

CommChannelOutput apply_comm_channel(const IqBuffer& x_v, const IqBuffer& x_h, const CommChannelConfig& cfg,
                                     const ChannelRealization& realization, std::uint64_t noise_seed);

// Co-polar frequency response at `length`-point DFT bins, with Doppler
// phases frozen at reference_time.
struct ChannelTruth {
  CVec v;
  CVec h;
};
ChannelTruth channel_response(const CommChannelConfig& cfg, const ChannelRealization& r, double sample_rate,
                              Eigen::Index length, double reference_time);

IqBuffer add_awgn(const IqBuffer& x, double snr_db, std::uint64_t seed);
void add_noise(CVec& x, double variance, std::mt19937_64& rng);

struct RadarTarget {
  double range = 0;     // m
  double velocity = 0;  // m/s, positive gives positive Doppler
  double rcs_gain_db = 0;
};

struct RadarEchoConfig {
  double carrier_freq = 24e9;
  double snr_db = kInf;
  std::uint64_t seed = 0;
  double start_time = 0;  // absolute time of sample 0, s
};

inline double round_trip_delay(double range) { return 2.0 * range / kSpeedOfLight; }
inline double doppler_shift(double velocity, double carrier_freq) {
  return 2.0 * velocity * carrier_freq / kSpeedOfLight;
}

// Delays x by tau seconds (zero-filled, same length). Integer sample delays
// are exact shifts; fractional ones use a band-limited spectral shift.
CVec delay_samples(const CVec& x, double tau, double sample_rate);

IqBuffer apply_radar_echo(const IqBuffer& tx, const std::vector<RadarTarget>& targets, const RadarEchoConfig& cfg);

}  // namespace isac
