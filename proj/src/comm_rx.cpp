#include "isac/comm_rx.hpp"

#include <algorithm>
#include <cmath>

namespace isac {

namespace {

constexpr int kSmoothingWidth = 5;

Eigen::Index segment_start(int l, Eigen::Index ns, int segments) {
  return (static_cast<Eigen::Index>(l) * ns + segments - 1) / segments;
}

RVec normalized(RVec v) {
  const double n = v.norm();
  if (n > 0) v /= n;
  return v;
}

}  // namespace

Eigen::Index synchronize(const IqBuffer& rx, const IqBuffer& pilot_reference) {
  const RVec mags = xcorr_magnitudes(pilot_reference, rx);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < mags.size(); ++k)
    if (mags[k] > mags[best]) best = k;
  std::vector<double> sorted(mags.data(), mags.data() + mags.size());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  if (!(mags[best] >= 3.0 * *mid)) throw Error("sync not found");
  // Peak-to-median alone passes pure noise once there are a few thousand lags.
  const double window = rx.samples.segment(best, pilot_reference.size()).norm();
  const double coef = mags[best] / (pilot_reference.samples.norm() * window);
  if (!(coef >= kMinSyncCorrelation)) throw Error("sync not found");
  return best;
}

ChannelEstimate estimate_channel(const IqBuffer& pilot_rx_v, const IqBuffer& pilot_rx_h, const IqBuffer& pilot_tx_v,
                                 const IqBuffer& pilot_tx_h, const NoiseLevels& levels) {
  auto one = [](const IqBuffer& rx, const IqBuffer& tx, double var) {
    if (rx.size() != tx.size()) throw Error("estimate_channel: pilot length mismatch");
    const Spectrum y = forward_spectrum(rx);
    const Spectrum u = forward_spectrum(tx);
    const double reg = static_cast<double>(u.size()) * var;
    Spectrum h{CVec(u.size()), u.bin_spacing, 0.0};
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      const double den = std::norm(u.bins[k]) + reg;
      if (den == 0) throw Error("estimate_channel: zero pilot bin with zero regularizer");
      h.bins[k] = y.bins[k] * std::conj(u.bins[k]) / den;
    }
    return h;
  };
  return {one(pilot_rx_v, pilot_tx_v, levels.total(Polarization::V)),
          one(pilot_rx_h, pilot_tx_h, levels.total(Polarization::H)), levels};
}

IqBuffer equalize(const IqBuffer& chirp_rx, const ChannelEstimate& est, Polarization p) {
  const Spectrum& h = est.of(p);
  if (chirp_rx.size() != h.size()) throw Error("equalize: chirp length differs from estimate");
  Spectrum y = forward_spectrum(chirp_rx);
  const double reg = est.levels.total(p);
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double den = std::norm(h.bins[k]) + reg;
    y.bins[k] = den > 0 ? std::conj(h.bins[k]) * y.bins[k] / den : cdouble(0);
  }
  return inverse_spectrum(y);
}

std::vector<Eigen::Index> occupied_bins(const Codebook& cb) {
  const auto n = cb.samples_per_chirp();
  const Spectrum s{CVec::Zero(n), cb.sample_rate / static_cast<double>(n), 0.0};
  std::vector<Eigen::Index> out;
  for (Eigen::Index k = 0; k < n; ++k)
    if (std::abs(s.frequency(k)) <= cb.allocated_bandwidth / 2) out.push_back(k);
  return out;
}

CommReceiver::CommReceiver(Codebook codebook) : cb_(std::move(codebook)) {
  const auto ns = cb_.samples_per_chirp();
  const std::size_t used = cb_.used_entry_count();
  templates_.reserve(used);
  Eigen::FFT<double> engine;
  CVec seg(ns), spec;
  for (std::size_t e = 0; e < used; ++e) {
    const IqBuffer u = synth_plain_chirp(cb_.center_of(e), cb_.bandwidth_of(e), cb_);
    RVec mag;
    if (cb_.segments == 1 || cb_.psk_order == 1) {
      engine.fwd(spec, u.samples);
      mag = spec.cwiseAbs();
    } else {
      // Expected magnitude spectrum when each segment carries an independent phase.
      RVec power = RVec::Zero(ns);
      for (int l = 0; l < cb_.segments; ++l) {
        const auto a = segment_start(l, ns, cb_.segments);
        const auto b = segment_start(l + 1, ns, cb_.segments);
        seg.setZero();
        seg.segment(a, b - a) = u.samples.segment(a, b - a);
        engine.fwd(spec, seg);
        power += spec.cwiseAbs2();
      }
      mag = power.cwiseSqrt();
    }
    templates_.push_back(normalized(circular_moving_average(mag, kSmoothingWidth)));
  }
}

ImDecision CommReceiver::demod_im(const IqBuffer& chirp) const {
  if (chirp.size() != cb_.samples_per_chirp()) throw Error("demod_im: chirp length mismatch");
  RVec a = fft<double>(chirp.samples).cwiseAbs();
  const double peak = a.maxCoeff();
  if (peak > 0) a /= peak;
  a = circular_moving_average(a, kSmoothingWidth);
  ImDecision d;
  d.metrics.resize(static_cast<Eigen::Index>(templates_.size()));
  for (std::size_t e = 0; e < templates_.size(); ++e) {
    const double c = templates_[e].dot(a);
    d.metrics[static_cast<Eigen::Index>(e)] = c * c;
  }
  Eigen::Index best = 0;
  for (Eigen::Index e = 1; e < d.metrics.size(); ++e)
    if (d.metrics[e] > d.metrics[best]) best = e;
  d.entry = static_cast<std::size_t>(best);
  std::tie(d.bandwidth_index, d.center_index) = cb_.entry_indices(d.entry);
  return d;
}

std::pair<Eigen::Index, Eigen::Index> CommReceiver::segment_window(int l) const {
  const auto ns = cb_.samples_per_chirp();
  Eigen::Index a = segment_start(l, ns, cb_.segments);
  Eigen::Index b = segment_start(l + 1, ns, cb_.segments);
  const double segment_samples = static_cast<double>(ns) / cb_.segments;
  const auto guard = static_cast<Eigen::Index>(std::ceil(cb_.beta * segment_samples / 2));
  const Eigen::Index a2 = a + (l > 0 ? guard : 0);
  const Eigen::Index b2 = b - (l < cb_.segments - 1 ? guard : 0);
  if (b2 > a2) return {a2, b2};
  return {a, b};
}

PmDecision CommReceiver::demod_pm(const IqBuffer& chirp, std::size_t entry) const {
  const int m_count = cb_.psk_order;
  PmDecision d;
  d.symbols.assign(cb_.segments, 0);
  d.metrics = RMat::Zero(cb_.segments, m_count);
  if (m_count == 1) return d;
  const IqBuffer base = synth_plain_chirp(cb_.center_of(entry), cb_.bandwidth_of(entry), cb_);
  for (int l = 0; l < cb_.segments; ++l) {
    const auto [a, b] = segment_window(l);
    for (int m = 0; m < m_count; ++m) {
      const CVec ref = base.samples.segment(a, b - a) * std::polar(1.0, cb_.symbol_phase(m));
      d.metrics(l, m) = ref.dot(chirp.samples.segment(a, b - a)).real();
    }
    Eigen::Index best = 0;
    for (int m = 1; m < m_count; ++m)
      if (d.metrics(l, m) > d.metrics(l, best)) best = m;
    d.symbols[l] = static_cast<int>(best);
  }
  return d;
}

std::vector<int> CommReceiver::demod_pm_mixed(const IqBuffer& chirp, std::size_t entry) const {
  const int m_count = cb_.psk_order;
  std::vector<int> symbols(cb_.segments, 0);
  if (m_count == 1) return symbols;
  const IqBuffer base = synth_plain_chirp(cb_.center_of(entry), cb_.bandwidth_of(entry), cb_);
  const CVec mixed = chirp.samples.cwiseProduct(base.samples.conjugate());
  for (int l = 0; l < cb_.segments; ++l) {
    const auto [a, b] = segment_window(l);
    const cdouble z = mixed.segment(a, b - a).sum();
    const auto q = static_cast<long>(std::lround(std::arg(z) * m_count / (2 * kPi)));
    symbols[l] = static_cast<int>(((q % m_count) + m_count) % m_count);
  }
  return symbols;
}

ChirpDecision CommReceiver::demod_chirp(const IqBuffer& chirp_v, const IqBuffer& chirp_h) const {
  ChirpDecision out;
  out.v_entry = demod_im(chirp_v).entry;
  out.h_entry = demod_im(chirp_h).entry;
  out.v_symbols = demod_pm(chirp_v, out.v_entry).symbols;
  out.h_symbols = demod_pm(chirp_h, out.h_entry).symbols;
  out.bits = decode(out.v_entry, out.h_entry, out.v_symbols, out.h_symbols, cb_);
  return out;
}

FrameDecode decode_frame(const IqBuffer& rx_v, const IqBuffer& rx_h, const CommReceiver& receiver,
                         const ChannelEstimate& est, bool equalize_chirps) {
  const Codebook& cb = receiver.codebook();
  const auto ns = cb.samples_per_chirp();
  const auto needed = ns * cb.chirps_per_frame;
  if (rx_v.size() < needed || rx_h.size() < needed) throw Error("decode_frame: received stream shorter than a frame");
  FrameDecode out;
  for (int i = 1; i < cb.chirps_per_frame; ++i) {
    IqBuffer cv = rx_v.slice(ns * i, ns);
    IqBuffer ch = rx_h.slice(ns * i, ns);
    if (equalize_chirps) {
      cv = equalize(cv, est, Polarization::V);
      ch = equalize(ch, est, Polarization::H);
    }
    out.chirps.push_back(receiver.demod_chirp(cv, ch));
    out.bits.insert(out.bits.end(), out.chirps.back().bits.begin(), out.chirps.back().bits.end());
  }
  return out;
}

double instantaneous_rate(double im_block_error, double pm_block_error, const Codebook& cb) {
  return (2 * (1 - im_block_error) * cb.im_bits() + 2 * (1 - pm_block_error) * cb.pm_bits()) / cb.chirp_duration;
}

LinkStats link_stats(const std::vector<ChirpDecision>& decisions, const std::vector<Codeword>& truth,
                     const Codebook& cb) {
  if (decisions.empty()) throw Error("link_stats: no data chirps");
  if (decisions.size() != truth.size()) throw Error("link_stats: decision and truth counts differ");
  std::size_t im_err = 0, pm_err = 0, good_bits = 0;
  LinkStats s;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto& d = decisions[i];
    const auto& t = truth[i];
    const bool v_im = d.v_entry == t.v_entry;
    const bool h_im = d.h_entry == t.h_entry;
    const bool v_pm = d.v_symbols == t.v_symbols;
    const bool h_pm = d.h_symbols == t.h_symbols;
    im_err += !v_im + !h_im;
    pm_err += !v_pm + !h_pm;
    good_bits += (v_im + h_im) * static_cast<std::size_t>(cb.im_bits()) +
                 (v_pm + h_pm) * static_cast<std::size_t>(cb.pm_bits());
    for (std::size_t k = 0; k < t.bits.size(); ++k) s.bit_errors += d.bits[k] != t.bits[k];
  }
  const double blocks = 2.0 * static_cast<double>(decisions.size());
  s.chirps = decisions.size();
  s.im_block_error = static_cast<double>(im_err) / blocks;
  s.pm_block_error = static_cast<double>(pm_err) / blocks;
  s.rate = instantaneous_rate(s.im_block_error, s.pm_block_error, cb);
  s.max_rate = cb.max_rate();
  s.measured_rate = static_cast<double>(good_bits) / (static_cast<double>(decisions.size()) * cb.chirp_duration);
  return s;
}

}  // namespace isac
