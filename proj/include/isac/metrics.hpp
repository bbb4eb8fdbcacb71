#pragma once

// Waveform and estimator quality metrics.

#include "isac/comm_rx.hpp"
#include "isac/dsp.hpp"

#include <vector>

namespace isac {

inline constexpr double kFloorDb = -300.0;

struct AmbiguitySurface {
  RMat values;  // delay x Doppler
  RVec delay_axis;    // s
  RVec doppler_axis;  // Hz
  bool normalized = true;

  // Index of the zero-Doppler column; throws if the axis lacks 0 Hz.
  Eigen::Index zero_doppler_index() const;
  RVec zero_doppler_cut() const { return values.col(zero_doppler_index()); }
};

// Delays k = -max_lag..max_lag samples.
AmbiguitySurface ambiguity(const IqBuffer& x, Eigen::Index max_lag, const RVec& doppler_axis);

// 64 Doppler points spaced 4/(64 T) from -2/T, T the signal duration.
RVec default_doppler_axis(double duration, int points = 64);

// |AF(k, 0)| for k = -(N-1)..N-1, normalized to 1 at k = 0.
RVec zero_doppler_cut(const IqBuffer& x);
RVec lag_axis(Eigen::Index n, double sample_rate);

struct IslBounds {
  double z0, z1, z2, z3;  // s
};

// First local minima on either side of zero delay; support is the full axis.
IslBounds default_isl_bounds(const RVec& delay_axis, const RVec& cut);

double isl(const RVec& delay_axis, const RVec& cut, const IslBounds& bounds);
double isl(const AmbiguitySurface& surface, const IslBounds& bounds);

struct CrlbConfig {
  double snr_linear = 10;
  Eigen::Index samples_per_chirp = 0;
  std::vector<double> bandwidths;
  double speed_of_light = kSpeedOfLight;
};

struct CrlbResult {
  std::vector<double> per_bandwidth;  // m^2
  double average = 0;                 // m^2
  double rcrlb = 0;                   // m
};

CrlbResult crlb_range(const CrlbConfig& cfg);
double crlb_range_approx(double snr_linear, double samples, double bandwidth, double c = kSpeedOfLight);

// Fraction of power with |f - center| > bandwidth/2, in dB.
double oob_fraction(const IqBuffer& x, double center_freq, double bandwidth);

// Over the occupied bins only; -300 dB for a perfect estimate.
double nmse(const Spectrum& estimate, const CVec& truth, const std::vector<Eigen::Index>& bins);

}  // namespace isac
