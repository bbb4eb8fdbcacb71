#include "isac/radar_rx.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace isac {

namespace {

double origin_of(const IqBuffer& y) { return static_cast<double>(y.size()) / 2.0; }

RVec hann(Eigen::Index n) {
  RVec w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = n == 1 ? 1.0 : 0.5 - 0.5 * std::cos(2 * kPi * i / n);
  return w;
}

IqBuffer windowed(const IqBuffer& y, bool apply) {
  if (!apply) return y;
  return {y.samples.cwiseProduct(hann(y.size()).cast<cdouble>()), y.sample_rate};
}

void require_chirps(const std::vector<IqBuffer>& y) {
  if (y.empty()) throw Error("range_align: no chirps");
  for (const auto& c : y) detail::require_signal(c, "range_align");
}

}  // namespace

Eigen::Index RangeGrid::nearest(double range) const {
  Eigen::Index best = 0;
  for (Eigen::Index m = 1; m < bins.size(); ++m)
    if (std::abs(bins[m] - range) < std::abs(bins[best] - range)) best = m;
  return best;
}

RangeGrid make_range_grid(double max_range, double spacing) {
  if (!(spacing > 0)) throw Error("range grid: spacing must be positive");
  if (!(max_range > 0)) throw Error("range grid: max_range must be positive");
  const auto n = static_cast<Eigen::Index>(std::floor(max_range / spacing + 1e-9)) + 1;
  RangeGrid g;
  g.spacing = spacing;
  g.bins = RVec::LinSpaced(n, 0.0, spacing * static_cast<double>(n - 1));
  return g;
}

void validate_range_grid(const RangeGrid& grid, const std::vector<ChirpParams>& params, double fs) {
  if (grid.size() == 0) throw Error("range grid: empty");
  double smax = 0;
  for (const auto& p : params) smax = std::max(smax, p.slope());
  const double unambiguous = kSpeedOfLight * fs / (2 * smax);
  if (grid.bins[grid.size() - 1] >= unambiguous)
    throw Error("range grid: max range " + std::to_string(grid.bins[grid.size() - 1]) +
                " m exceeds unambiguous range " + std::to_string(unambiguous) + " m");
}

IqBuffer deramp(const IqBuffer& echo, const IqBuffer& tx) {
  detail::require_signal(echo, "deramp");
  if (echo.size() != tx.size()) throw Error("deramp: echo and reference lengths differ");
  return {echo.samples.cwiseProduct(tx.samples.conjugate()), echo.sample_rate};
}

IqBuffer decimate(const IqBuffer& x, int factor) {
  if (factor < 1) throw Error("decimate: factor must be at least 1");
  if (factor == 1) return x;
  const Eigen::Index n = (x.size() + factor - 1) / factor;
  CVec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = x.samples[i * factor];
  return {std::move(out), x.sample_rate / factor};
}

cdouble centered_dtft(const IqBuffer& y, double f, double origin) {
  const double fs = y.sample_rate;
  const double wrapped = f - fs * std::round(f / fs);
  return detail::dtft_sum(y.samples, wrapped, fs) * std::polar(1.0, 2 * kPi * f * origin / fs);
}

CMat range_align(const std::vector<IqBuffer>& y, const std::vector<ChirpParams>& params, const RangeGrid& grid,
                 const AlignOptions& opt) {
  require_chirps(y);
  if (y.size() != params.size()) throw Error("range_align: chirp and parameter counts differ");
  validate_range_grid(grid, params, y.front().sample_rate);
  CMat out(grid.size(), static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const IqBuffer w = windowed(y[i], opt.hann);
    const double o = origin_of(w);
    const double slope = params[i].slope();
    for (Eigen::Index m = 0; m < grid.size(); ++m)
      out(m, static_cast<Eigen::Index>(i)) = centered_dtft(w, beat_frequency(slope, grid.bins[m]), o);
  }
  return out;
}

CMat naive_range_profile(const std::vector<IqBuffer>& y, double slope, const RangeGrid& grid, const AlignOptions& opt) {
  require_chirps(y);
  CMat out(grid.size(), static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const IqBuffer w = windowed(y[i], opt.hann);
    const double o = origin_of(w);
    for (Eigen::Index m = 0; m < grid.size(); ++m)
      out(m, static_cast<Eigen::Index>(i)) = centered_dtft(w, beat_frequency(slope, grid.bins[m]), o);
  }
  return out;
}

CMat phase_correct(const CMat& aligned, const std::vector<ChirpParams>& params, const RangeGrid& grid, double f_ref,
                   double b_ref) {
  if (aligned.cols() != static_cast<Eigen::Index>(params.size()) || aligned.rows() != grid.size())
    throw Error("phase_correct: matrix shape does not match grid and chirps");
  CMat out = aligned;
  for (Eigen::Index i = 0; i < aligned.cols(); ++i) {
    const auto& p = params[static_cast<std::size_t>(i)];
    const double df = p.center_freq - f_ref;
    const double ds = (p.bandwidth - b_ref) / p.duration;
    if (df == 0 && ds == 0) continue;
    for (Eigen::Index m = 0; m < grid.size(); ++m) {
      const double tau = round_trip_delay(grid.bins[m]);
      const double err = -2 * kPi * df * tau + kPi * ds * tau * tau;
      out(m, i) *= std::polar(1.0, -err);
    }
  }
  return out;
}

RangeDopplerMap doppler_map(const CMat& corrected, const RangeGrid& grid, double chirp_duration, double carrier_freq,
                            bool use_hann) {
  const Eigen::Index nc = corrected.cols();
  if (nc < 2) throw Error("doppler_map: need at least two chirps");
  RangeDopplerMap map;
  map.cells.resize(corrected.rows(), nc);
  const RVec w = use_hann ? hann(nc) : RVec::Ones(nc);
  Eigen::FFT<double> engine;
  CVec row(nc), spec;
  const Eigen::Index half = nc / 2;
  for (Eigen::Index m = 0; m < corrected.rows(); ++m) {
    row = corrected.row(m).transpose().cwiseProduct(w.cast<cdouble>());
    engine.fwd(spec, row);
    for (Eigen::Index k = 0; k < nc; ++k) map.cells(m, k) = spec[(k + nc - half) % nc];
  }
  map.range_axis = grid.bins;
  const double lambda = kSpeedOfLight / carrier_freq;
  map.velocity_axis.resize(nc);
  for (Eigen::Index k = 0; k < nc; ++k)
    map.velocity_axis[k] = static_cast<double>(k - half) * lambda / (2.0 * nc * chirp_duration);
  return map;
}

std::vector<Detection> extract_targets(const RangeDopplerMap& map, double threshold_db) {
  if (map.cells.size() == 0) throw Error("extract_targets: empty map");
  const RMat p = map.cells.cwiseAbs2();
  const double peak = p.maxCoeff();
  const double floor = peak * from_db10(threshold_db);
  const Eigen::Index nr = p.rows(), nc = p.cols();
  std::vector<Detection> out;
  for (Eigen::Index m = 0; m < nr; ++m) {
    for (Eigen::Index k = 0; k < nc; ++k) {
      const double v = p(m, k);
      if (v < floor || v <= 0) continue;
      bool is_max = true;
      for (int dm = -1; dm <= 1 && is_max; ++dm) {
        for (int dk = -1; dk <= 1; ++dk) {
          if (dm == 0 && dk == 0) continue;
          const Eigen::Index mm = m + dm;
          if (mm < 0 || mm >= nr) continue;
          const Eigen::Index kk = (k + dk + nc) % nc;
          const double u = p(mm, kk);
          const bool earlier = mm < m || (mm == m && kk < k);
          if (u > v || (u == v && earlier)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) out.push_back({map.range_axis[m], map.velocity_axis[k], db10(v / peak), m, k});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.power_db > b.power_db; });
  return out;
}

std::vector<Eigen::Index> per_chirp_peak_bins(const CMat& profile, Eigen::Index first, Eigen::Index last) {
  first = std::max<Eigen::Index>(first, 0);
  last = std::min<Eigen::Index>(last, profile.rows() - 1);
  if (first > last) throw Error("per_chirp_peak_bins: empty bin window");
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < profile.cols(); ++i) {
    Eigen::Index best = first;
    for (Eigen::Index m = first + 1; m <= last; ++m)
      if (std::abs(profile(m, i)) > std::abs(profile(best, i))) best = m;
    out.push_back(best);
  }
  return out;
}

double estimate_range(const IqBuffer& y, double slope, const RangeGrid& grid) {
  detail::require_signal(y, "estimate_range");
  if (grid.size() == 0) throw Error("estimate_range: empty grid");
  const double o = origin_of(y);
  const double fs = y.sample_rate;
  auto score = [&](double r) { return std::abs(centered_dtft(y, beat_frequency(slope, r), o)); };
  // Coarse peak on a 4x zero-padded FFT restricted to the grid's range span.
  const Eigen::Index len = detail::next_pow2(4 * y.size());
  const CVec spec = fft<double>(y.samples, len);
  const double bin_hz = fs / static_cast<double>(len);
  const double per_bin = kSpeedOfLight * bin_hz / (2 * slope);
  const double r_lo = grid.bins[0];
  const double r_hi = grid.bins[grid.size() - 1];
  double best_r = r_lo, best = -1;
  for (Eigen::Index k = 0; k < len; ++k) {
    const double f = static_cast<double>(k <= len / 2 ? k : k - len) * bin_hz;
    const double r = -f * kSpeedOfLight / (2 * slope);
    if (r < r_lo - per_bin || r > r_hi + per_bin) continue;
    const double v = std::abs(spec[k]);
    if (v > best) {
      best = v;
      best_r = r;
    }
  }
  double a = best_r - per_bin;
  double b = best_r + per_bin;
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = score(c), fd = score(d);
  const double tol = per_bin * 1e-7;
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = score(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = score(d);
    }
  }
  return (a + b) / 2;
}

double range_rmse(const std::vector<double>& est, const std::vector<double>& truth) {
  if (est.empty()) throw Error("range_rmse: no trials");
  if (est.size() != truth.size()) throw Error("range_rmse: estimate and truth counts differ");
  double acc = 0;
  for (std::size_t i = 0; i < est.size(); ++i) acc += (est[i] - truth[i]) * (est[i] - truth[i]);
  return std::sqrt(acc / static_cast<double>(est.size()));
}

}  // namespace isac
