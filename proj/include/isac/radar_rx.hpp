#pragma once

// Monostatic receiver for hopping IM-PM-FMCW chirps.
//
// Fast time is measured from the middle of each chirp. With that origin the
// residual phase at a target bin is pi*S*tau^2 - 2*pi*f_c*tau, so hopping in
// center frequency and slope is removed by a single deterministic phase.

#include "isac/channel.hpp"
#include "isac/dsp.hpp"
#include "isac/waveform.hpp"

#include <vector>

namespace isac {

struct RangeGrid {
  RVec bins;  // m
  double spacing = 0;

  Eigen::Index size() const { return bins.size(); }
  Eigen::Index nearest(double range) const;
};

RangeGrid make_range_grid(double max_range, double spacing);

// Throws unless every grid range maps to an unambiguous beat frequency.
void validate_range_grid(const RangeGrid& grid, const std::vector<ChirpParams>& params, double sample_rate);

IqBuffer deramp(const IqBuffer& echo, const IqBuffer& tx_chirp);

// Keeps every factor-th sample.
IqBuffer decimate(const IqBuffer& x, int factor);

// Beat frequency of a target at `range` for a chirp of slope S (echo * conj(tx)).
inline double beat_frequency(double slope, double range) { return -2.0 * slope * range / kSpeedOfLight; }

// Sum_n y[n] exp(-j 2 pi f (n - origin) / fs) for any f; the sum is periodic in f.
cdouble centered_dtft(const IqBuffer& y, double freq, double origin_samples);

struct AlignOptions {
  bool hann = false;
};

// Rows are range bins, columns are chirps.
CMat range_align(const std::vector<IqBuffer>& deramped, const std::vector<ChirpParams>& params,
                 const RangeGrid& grid, const AlignOptions& opt = {});

// Fixed-slope baseline: every chirp evaluated with the reference slope.
CMat naive_range_profile(const std::vector<IqBuffer>& deramped, double reference_slope, const RangeGrid& grid,
                         const AlignOptions& opt = {});

CMat phase_correct(const CMat& aligned, const std::vector<ChirpParams>& params, const RangeGrid& grid,
                   double reference_center, double reference_bandwidth);

struct RangeDopplerMap {
  CMat cells;  // range bins x Doppler bins
  RVec range_axis;
  RVec velocity_axis;
  double reference_bandwidth = 0;
  double reference_center = 0;
};

RangeDopplerMap doppler_map(const CMat& corrected, const RangeGrid& grid, double chirp_duration, double carrier_freq,
                            bool hann = false);

struct Detection {
  double range = 0;
  double velocity = 0;
  double power_db = 0;  // relative to the map peak
  Eigen::Index range_bin = 0;
  Eigen::Index doppler_bin = 0;
};

std::vector<Detection> extract_targets(const RangeDopplerMap& map, double threshold_db);

// Per-chirp argmax range bin within [first_bin, last_bin].
std::vector<Eigen::Index> per_chirp_peak_bins(const CMat& profile, Eigen::Index first_bin, Eigen::Index last_bin);

// Continuous range estimate for one deramped chirp within the grid span:
// zero-padded FFT peak, then a golden-section search on |DTFT|.
double estimate_range(const IqBuffer& deramped, double slope, const RangeGrid& grid);

double range_rmse(const std::vector<double>& estimates, const std::vector<double>& truth);

}  // namespace isac
