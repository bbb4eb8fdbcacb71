#include "isac/metrics.hpp"

#include <cmath>

namespace isac {

Eigen::Index AmbiguitySurface::zero_doppler_index() const {
  for (Eigen::Index j = 0; j < doppler_axis.size(); ++j)
    if (doppler_axis[j] == 0) return j;
  throw Error("ambiguity surface has no zero-Doppler column");
}

AmbiguitySurface ambiguity(const IqBuffer& x, Eigen::Index max_lag, const RVec& doppler_axis) {
  detail::require_signal(x, "ambiguity");
  const Eigen::Index n = x.size();
  if (max_lag < 0 || max_lag > n - 1) throw Error("ambiguity: delay axis exceeds the signal length");
  const double energy = x.samples.squaredNorm();
  if (!(energy > 0)) throw Error("ambiguity: zero-energy input");
  const Eigen::Index len = detail::next_pow2(2 * n);
  const CVec X = fft<double>(x.samples, len);
  AmbiguitySurface s;
  s.values.resize(2 * max_lag + 1, doppler_axis.size());
  s.doppler_axis = doppler_axis;
  s.delay_axis = lag_axis(max_lag + 1, x.sample_rate);
  CVec z(n);
  for (Eigen::Index j = 0; j < doppler_axis.size(); ++j) {
    const double w = -2 * kPi * doppler_axis[j] / x.sample_rate;
    for (Eigen::Index i = 0; i < n; ++i) z[i] = x.samples[i] * std::polar(1.0, w * static_cast<double>(i));
    // c[k] = sum_i z[i] conj(x[i - k])
    const CVec Z = fft<double>(z, len);
    const CVec c = ifft<double>(CVec(Z.array() * X.array().conjugate()));
    for (Eigen::Index k = -max_lag; k <= max_lag; ++k)
      s.values(k + max_lag, j) = std::abs(c[(k + len) % len]) / energy;
  }
  return s;
}

RVec default_doppler_axis(double duration, int points) {
  RVec axis(points);
  const double step = 4.0 / (duration * points);
  for (int k = 0; k < points; ++k) axis[k] = (k - points / 2) * step;
  return axis;
}

RVec lag_axis(Eigen::Index n, double fs) {
  RVec axis(2 * n - 1);
  for (Eigen::Index k = 0; k < axis.size(); ++k) axis[k] = static_cast<double>(k - (n - 1)) / fs;
  return axis;
}

RVec zero_doppler_cut(const IqBuffer& x) {
  detail::require_signal(x, "zero_doppler_cut");
  const Eigen::Index n = x.size();
  const Eigen::Index len = detail::next_pow2(2 * n);
  const CVec X = fft<double>(x.samples, len);
  const CVec c = ifft<double>(CVec(X.cwiseAbs2().cast<cdouble>()));
  const double energy = x.samples.squaredNorm();
  if (!(energy > 0)) throw Error("zero_doppler_cut: zero-energy input");
  RVec cut(2 * n - 1);
  for (Eigen::Index k = -(n - 1); k <= n - 1; ++k) cut[k + n - 1] = std::abs(c[(k + len) % len]) / energy;
  return cut;
}

IslBounds default_isl_bounds(const RVec& delay, const RVec& cut) {
  if (delay.size() != cut.size() || cut.size() < 3) throw Error("isl: cut and axis sizes differ");
  Eigen::Index centre = 0;
  for (Eigen::Index k = 1; k < delay.size(); ++k)
    if (std::abs(delay[k]) < std::abs(delay[centre])) centre = k;
  Eigen::Index hi = centre + 1;
  while (hi < cut.size() - 1 && cut[hi + 1] < cut[hi]) ++hi;
  Eigen::Index lo = centre - 1;
  while (lo > 0 && cut[lo - 1] < cut[lo]) --lo;
  lo = std::max<Eigen::Index>(lo, 0);
  hi = std::min<Eigen::Index>(hi, cut.size() - 1);
  return {delay[0], delay[lo], delay[hi], delay[delay.size() - 1]};
}

namespace {

double trapezoid(const RVec& delay, const RVec& cut, double a, double b) {
  double acc = 0;
  for (Eigen::Index k = 0; k + 1 < delay.size(); ++k) {
    if (delay[k] < a - 1e-15 || delay[k + 1] > b + 1e-15) continue;
    acc += 0.5 * (cut[k] + cut[k + 1]) * (delay[k + 1] - delay[k]);
  }
  return acc;
}

}  // namespace

double isl(const RVec& delay, const RVec& cut, const IslBounds& z) {
  if (!(z.z0 < z.z1 && z.z1 < z.z2 && z.z2 < z.z3)) throw Error("isl: bounds must satisfy z0 < z1 < z2 < z3");
  if (delay.size() != cut.size()) throw Error("isl: cut and axis sizes differ");
  const double main = trapezoid(delay, cut, z.z1, z.z2);
  const double side = trapezoid(delay, cut, z.z0, z.z1) + trapezoid(delay, cut, z.z2, z.z3);
  if (!(main > 0)) throw Error("isl: empty mainlobe");
  if (side <= 0) return kFloorDb;
  return std::max(kFloorDb, db10(side / main));
}

double isl(const AmbiguitySurface& s, const IslBounds& bounds) { return isl(s.delay_axis, s.zero_doppler_cut(), bounds); }

CrlbResult crlb_range(const CrlbConfig& cfg) {
  if (!(cfg.snr_linear > 0)) throw Error("crlb: snr must be positive");
  if (cfg.samples_per_chirp < 2) throw Error("crlb: need more than one sample per chirp");
  if (cfg.bandwidths.empty()) throw Error("crlb: no bandwidths");
  const double n = static_cast<double>(cfg.samples_per_chirp);
  const double c = cfg.speed_of_light;
  CrlbResult r;
  for (double b : cfg.bandwidths) {
    if (!(b > 0)) throw Error("crlb: bandwidths must be positive");
    r.per_bandwidth.push_back(3 * c * c * n / (8 * kPi * kPi * cfg.snr_linear * (n * n - 1) * b * b));
  }
  for (double v : r.per_bandwidth) r.average += v;
  r.average /= static_cast<double>(r.per_bandwidth.size());
  r.rcrlb = std::sqrt(r.average);
  return r;
}

double crlb_range_approx(double snr, double n, double b, double c) {
  return 3 * c * c / (8 * kPi * kPi * snr * n * b * b);
}

double oob_fraction(const IqBuffer& x, double center, double bandwidth) {
  detail::require_signal(x, "oob_fraction");
  if (std::abs(center) + bandwidth / 2 > x.sample_rate / 2) throw Error("oob_fraction: band outside Nyquist");
  IqBuffer shifted = x;
  const double w = -2 * kPi * center / x.sample_rate;
  for (Eigen::Index n = 0; n < x.size(); ++n) shifted.samples[n] *= std::polar(1.0, w * static_cast<double>(n));
  const Psd p = welch_psd(shifted, x.size(), 0.0);
  double total = 0, outside = 0;
  for (Eigen::Index k = 0; k < p.psd.size(); ++k) {
    total += p.psd[k];
    if (std::abs(p.freqs[k]) > bandwidth / 2) outside += p.psd[k];
  }
  if (!(total > 0)) throw Error("oob_fraction: zero-power input");
  if (outside <= 0) return kFloorDb;
  return std::max(kFloorDb, db10(outside / total));
}

double nmse(const Spectrum& est, const CVec& truth, const std::vector<Eigen::Index>& bins) {
  if (est.size() != truth.size()) throw Error("nmse: bin counts differ");
  double err = 0, ref = 0;
  for (Eigen::Index k : bins) {
    err += std::norm(est.bins[k] - truth[k]);
    ref += std::norm(truth[k]);
  }
  if (!(ref > 0)) throw Error("nmse: zero-energy truth");
  if (err <= 0) return kFloorDb;
  return std::max(kFloorDb, db10(err / ref));
}

}  // namespace isac
