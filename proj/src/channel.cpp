#include "isac/channel.hpp"

#include <cmath>
#include <string>

namespace isac {

namespace {

struct RicianScales {
  double los;
  double nlos;  // per path
};

RicianScales rician_scales(const CommChannelConfig& cfg) {
  if (std::isinf(cfg.k_factor_db) && cfg.k_factor_db > 0) return {1.0, 0.0};
  const double k = from_db10(cfg.k_factor_db);
  const int paths = std::max(cfg.nlos_path_count, 1);
  return {std::sqrt(k / (k + 1)), std::sqrt(1.0 / ((k + 1) * paths))};
}

cdouble cn01(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  const double re = g(rng);
  const double im = g(rng);
  return {re, im};
}

CVec shift_integer(const CVec& x, Eigen::Index d) {
  const Eigen::Index n = x.size();
  CVec out = CVec::Zero(n);
  if (d < n) out.tail(n - d) = x.head(n - d);
  return out;
}

// x delayed by tau (integer-sample part only) with carrier phase and a
// Doppler phasor on absolute sample time.
void accumulate_path(CVec& acc, const CVec& x, cdouble gain, double tau, double doppler, double carrier,
                     double fs) {
  const auto d = static_cast<Eigen::Index>(std::llround(tau * fs));
  const CVec shifted = shift_integer(x, d);
  const cdouble g = gain * std::polar(1.0, -2 * kPi * carrier * tau);
  if (doppler == 0) {
    acc += g * shifted;
    return;
  }
  const double w = 2 * kPi * doppler / fs;
  for (Eigen::Index n = 0; n < x.size(); ++n) acc[n] += g * shifted[n] * std::polar(1.0, w * n);
}

}  // namespace

void CommChannelConfig::validate(double chirp_duration) const {
  if (std::isnan(k_factor_db) || (std::isinf(k_factor_db) && k_factor_db < 0))
    throw Error("channel: k_factor_db must be finite or +inf");
  if (nlos_path_count < 0) throw Error("channel: nlos_path_count must be non-negative");
  if (crosspol_leakage_db > 0) throw Error("channel: crosspol_leakage_db must be <= 0");
  if (los_delay < 0 || los_delay >= chirp_duration) throw Error("channel: los_delay must lie in [0, T_c)");
  if (nlos_max_delay < 0 || nlos_max_delay >= chirp_duration)
    throw Error("channel: nlos_max_delay must lie in [0, T_c)");
  for (double d : nlos_delays)
    if (d < 0 || d >= chirp_duration) throw Error("channel: nlos delays must lie in [0, T_c)");
  if (!nlos_delays.empty() && static_cast<int>(nlos_delays.size()) != nlos_path_count)
    throw Error("channel: nlos_delays length must equal nlos_path_count");
  if (!nlos_dopplers.empty() && static_cast<int>(nlos_dopplers.size()) != nlos_path_count)
    throw Error("channel: nlos_dopplers length must equal nlos_path_count");
}

ChannelRealization draw_realization(const CommChannelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChannelRealization r;
  r.rng_seed = seed;
  r.los_gain_v = std::polar(1.0, 2 * kPi * unit(rng));
  r.los_gain_h = std::polar(1.0, 2 * kPi * unit(rng));
  const int paths = cfg.nlos_path_count;
  r.nlos_gains_v.resize(paths);
  r.nlos_gains_h.resize(paths);
  for (int l = 0; l < paths; ++l) r.nlos_gains_v[l] = cn01(rng);
  for (int l = 0; l < paths; ++l) r.nlos_gains_h[l] = cn01(rng);
  for (int l = 0; l < paths; ++l) {
    const double d = unit(rng) * cfg.nlos_max_delay;
    const double nu = (2 * unit(rng) - 1) * std::abs(cfg.los_doppler);
    r.nlos_delays.push_back(cfg.nlos_delays.empty() ? d : cfg.nlos_delays[l]);
    r.nlos_dopplers.push_back(cfg.nlos_dopplers.empty() ? nu : cfg.nlos_dopplers[l]);
  }
  const double leak = std::isinf(cfg.crosspol_leakage_db) ? 0.0 : std::sqrt(from_db10(cfg.crosspol_leakage_db));
  r.crosspol_hv = std::polar(leak, 2 * kPi * unit(rng));
  r.crosspol_vh = std::polar(leak, 2 * kPi * unit(rng));
  return r;
}

ChannelRealization identity_realization(const CommChannelConfig& cfg) {
  ChannelRealization r;
  r.nlos_gains_v = CVec::Zero(cfg.nlos_path_count);
  r.nlos_gains_h = CVec::Zero(cfg.nlos_path_count);
  r.nlos_delays.assign(cfg.nlos_path_count, 0.0);
  r.nlos_dopplers.assign(cfg.nlos_path_count, 0.0);
  return r;
}

CommChannelOutput apply_comm_channel(const IqBuffer& x_v, const IqBuffer& x_h, const CommChannelConfig& cfg,
                                     const ChannelRealization& r, std::uint64_t noise_seed) {
  detail::require_signal(x_v, "apply_comm_channel");
  detail::require_signal(x_h, "apply_comm_channel");
  if (x_v.size() != x_h.size() || x_v.sample_rate != x_h.sample_rate)
    throw Error("apply_comm_channel: V and H streams differ in length or sample rate");
  const double fs = x_v.sample_rate;
  const auto scale = rician_scales(cfg);
  const int paths = static_cast<int>(r.nlos_gains_v.size());

  CommChannelOutput out;
  CVec yv = CVec::Zero(x_v.size());
  CVec yh = CVec::Zero(x_h.size());
  const double fc = cfg.carrier_freq;
  accumulate_path(yv, x_v.samples, scale.los * r.los_gain_v, cfg.los_delay, cfg.los_doppler, fc, fs);
  accumulate_path(yh, x_h.samples, scale.los * r.los_gain_h, cfg.los_delay, cfg.los_doppler, fc, fs);
  if (scale.nlos > 0) {
    for (int l = 0; l < paths; ++l) {
      accumulate_path(yv, x_v.samples, scale.nlos * r.nlos_gains_v[l], r.nlos_delays[l], r.nlos_dopplers[l], fc, fs);
      accumulate_path(yh, x_h.samples, scale.nlos * r.nlos_gains_h[l], r.nlos_delays[l], r.nlos_dopplers[l], fc, fs);
    }
  }
  CVec iv = CVec::Zero(x_v.size());
  CVec ih = CVec::Zero(x_h.size());
  if (std::abs(r.crosspol_hv) > 0)
    accumulate_path(iv, x_h.samples, r.crosspol_hv, cfg.los_delay, cfg.los_doppler, fc, fs);
  if (std::abs(r.crosspol_vh) > 0)
    accumulate_path(ih, x_v.samples, r.crosspol_vh, cfg.los_delay, cfg.los_doppler, fc, fs);
  out.interference_var_v = std::norm(r.crosspol_hv) * x_h.mean_power();
  out.interference_var_h = std::norm(r.crosspol_vh) * x_v.mean_power();
  yv += iv;
  yh += ih;

  if (!std::isinf(cfg.snr_db)) {
    const double snr = from_db10(cfg.snr_db);
    out.noise_var_v = yv.squaredNorm() / static_cast<double>(yv.size()) / snr;
    out.noise_var_h = yh.squaredNorm() / static_cast<double>(yh.size()) / snr;
    std::mt19937_64 rng(noise_seed);
    add_noise(yv, out.noise_var_v, rng);
    add_noise(yh, out.noise_var_h, rng);
  }
  out.rx_v = {std::move(yv), fs};
  out.rx_h = {std::move(yh), fs};
  return out;
}

ChannelTruth channel_response(const CommChannelConfig& cfg, const ChannelRealization& r, double fs,
                              Eigen::Index length, double reference_time) {
  const auto scale = rician_scales(cfg);
  ChannelTruth t{CVec::Zero(length), CVec::Zero(length)};
  auto add = [&](CVec& h, cdouble gain, double tau, double doppler) {
    const double d = static_cast<double>(std::llround(tau * fs));
    const cdouble g = gain * std::polar(1.0, -2 * kPi * cfg.carrier_freq * tau) *
                      std::polar(1.0, 2 * kPi * doppler * reference_time);
    for (Eigen::Index k = 0; k < length; ++k)
      h[k] += g * std::polar(1.0, -2 * kPi * static_cast<double>(k) * d / static_cast<double>(length));
  };
  add(t.v, scale.los * r.los_gain_v, cfg.los_delay, cfg.los_doppler);
  add(t.h, scale.los * r.los_gain_h, cfg.los_delay, cfg.los_doppler);
  if (scale.nlos > 0) {
    for (Eigen::Index l = 0; l < r.nlos_gains_v.size(); ++l) {
      add(t.v, scale.nlos * r.nlos_gains_v[l], r.nlos_delays[l], r.nlos_dopplers[l]);
      add(t.h, scale.nlos * r.nlos_gains_h[l], r.nlos_delays[l], r.nlos_dopplers[l]);
    }
  }
  return t;
}

void add_noise(CVec& x, double variance, std::mt19937_64& rng) {
  if (variance <= 0) return;
  std::normal_distribution<double> g(0.0, std::sqrt(variance / 2));
  for (auto& v : x) {
    const double re = g(rng);
    const double im = g(rng);
    v += cdouble(re, im);
  }
}

IqBuffer add_awgn(const IqBuffer& x, double snr_db, std::uint64_t seed) {
  detail::require_signal(x, "add_awgn");
  if (std::isinf(snr_db) && snr_db > 0) return x;
  const double p = x.mean_power();
  if (!(p > 0)) throw Error("add_awgn: input has zero power, SNR undefined");
  IqBuffer out = x;
  std::mt19937_64 rng(seed);
  add_noise(out.samples, p / from_db10(snr_db), rng);
  return out;
}

CVec delay_samples(const CVec& x, double tau, double fs) {
  const double shift = tau * fs;
  const double whole = std::round(shift);
  if (std::abs(shift - whole) < 1e-9) return shift_integer(x, static_cast<Eigen::Index>(whole));
  const Eigen::Index n = x.size();
  const Eigen::Index len = detail::next_pow2(2 * n + static_cast<Eigen::Index>(std::ceil(shift)));
  CVec spec = fft<double>(x, len);
  for (Eigen::Index k = 0; k < len; ++k) {
    const double kk = static_cast<double>(k < len / 2 ? k : k - len);
    spec[k] *= std::polar(1.0, -2 * kPi * kk * shift / static_cast<double>(len));
  }
  CVec y = ifft<double>(spec).head(n);
  // Nothing arrives before the leading edge.
  const auto lead = static_cast<Eigen::Index>(std::floor(shift));
  if (lead > 0) y.head(std::min(lead, n)).setZero();
  return y;
}

IqBuffer apply_radar_echo(const IqBuffer& tx, const std::vector<RadarTarget>& targets, const RadarEchoConfig& cfg) {
  detail::require_signal(tx, "apply_radar_echo");
  const double fs = tx.sample_rate;
  CVec echo = CVec::Zero(tx.size());
  for (const auto& t : targets) {
    if (t.range < 0) throw Error("apply_radar_echo: negative target range");
    const double tau = round_trip_delay(t.range);
    if (tau >= tx.duration())
      throw Error("apply_radar_echo: target at " + std::to_string(t.range) + " m delays beyond one chirp");
    const double amp = std::pow(10.0, t.rcs_gain_db / 20.0);
    const CVec delayed = delay_samples(tx.samples, tau, fs);
    const cdouble g = amp * std::polar(1.0, -2 * kPi * cfg.carrier_freq * tau);
    const double fd = doppler_shift(t.velocity, cfg.carrier_freq);
    for (Eigen::Index n = 0; n < tx.size(); ++n)
      echo[n] += g * delayed[n] * std::polar(1.0, 2 * kPi * fd * (cfg.start_time + static_cast<double>(n) / fs));
  }
  IqBuffer out{std::move(echo), fs};
  if (std::isinf(cfg.snr_db) && cfg.snr_db > 0) return out;
  return add_awgn(out, cfg.snr_db, cfg.seed);
}

}  // namespace isac
