#pragma once

// Communication receiver: pilot sync, LMMSE channel estimate, MMSE
// equalizer, IM and PM demodulation, link statistics.

#include "isac/channel.hpp"
#include "isac/dsp.hpp"
#include "isac/waveform.hpp"

#include <vector>

namespace isac {

// Per-sample noise and cross-pol interference variances for each stream.
struct NoiseLevels {
  double noise_v = 0;
  double noise_h = 0;
  double interference_v = 0;
  double interference_h = 0;

  double total(Polarization p) const {
    return p == Polarization::V ? noise_v + interference_v : noise_h + interference_h;
  }
  static NoiseLevels from(const CommChannelOutput& o) {
    return {o.noise_var_v, o.noise_var_h, o.interference_var_v, o.interference_var_h};
  }
};

struct ChannelEstimate {
  Spectrum h_v;
  Spectrum h_h;
  NoiseLevels levels;

  const Spectrum& of(Polarization p) const { return p == Polarization::V ? h_v : h_h; }
};

// Normalized correlation a pilot must reach at the peak lag.
inline constexpr double kMinSyncCorrelation = 0.25;

// Offset of the pilot inside rx. Throws when the correlation peak is below
// three times the median correlation magnitude or the normalized
// correlation at the peak is below kMinSyncCorrelation.
Eigen::Index synchronize(const IqBuffer& rx, const IqBuffer& pilot_reference);

ChannelEstimate estimate_channel(const IqBuffer& pilot_rx_v, const IqBuffer& pilot_rx_h, const IqBuffer& pilot_tx_v,
                                 const IqBuffer& pilot_tx_h, const NoiseLevels& levels);

IqBuffer equalize(const IqBuffer& chirp_rx, const ChannelEstimate& est, Polarization p);

// Bins whose frequency lies inside the allocated band.
std::vector<Eigen::Index> occupied_bins(const Codebook& cb);

struct ImDecision {
  std::size_t entry = 0;
  int bandwidth_index = 0;
  int center_index = 0;
  RVec metrics;  // one per used codebook entry
};

struct PmDecision {
  std::vector<int> symbols;
  RMat metrics;  // segments x M
};

struct ChirpDecision {
  std::size_t v_entry = 0;
  std::size_t h_entry = 0;
  std::vector<int> v_symbols;
  std::vector<int> h_symbols;
  Bits bits;
};

class CommReceiver {
 public:
  explicit CommReceiver(Codebook codebook);

  const Codebook& codebook() const { return cb_; }
  const RVec& im_template(std::size_t entry) const { return templates_[entry]; }

  ImDecision demod_im(const IqBuffer& chirp) const;
  // Correlates every segment against M phase-rotated references.
  PmDecision demod_pm(const IqBuffer& chirp, std::size_t entry) const;
  // Conjugate mix with one reference, then quantize each segment phase.
  std::vector<int> demod_pm_mixed(const IqBuffer& chirp, std::size_t entry) const;

  ChirpDecision demod_chirp(const IqBuffer& chirp_v, const IqBuffer& chirp_h) const;

  // Samples [first, last) integrated for segment l, with a guard cut out
  // around interior phase transitions.
  std::pair<Eigen::Index, Eigen::Index> segment_window(int l) const;

 private:
  Codebook cb_;
  std::vector<RVec> templates_;
};

struct FrameDecode {
  Bits bits;
  std::vector<ChirpDecision> chirps;
};

// rx_v, rx_h start at the pilot. Equalizes and demodulates chirps 1..I-1.
FrameDecode decode_frame(const IqBuffer& rx_v, const IqBuffer& rx_h, const CommReceiver& receiver,
                         const ChannelEstimate& est, bool equalize_chirps = true);

struct LinkStats {
  double im_block_error = 0;  // fraction of (chirp, polarization) IM blocks in error
  double pm_block_error = 0;  // fraction of PM blocks with any symbol error
  double rate = 0;            // bit/s from the block error rates
  double max_rate = 0;
  double measured_rate = 0;  // bit/s counted from correct blocks
  std::size_t chirps = 0;
  std::size_t bit_errors = 0;
};

LinkStats link_stats(const std::vector<ChirpDecision>& decisions, const std::vector<Codeword>& truth,
                     const Codebook& cb);

double instantaneous_rate(double im_block_error, double pm_block_error, const Codebook& cb);

}  // namespace isac
