#include "isac/channel.hpp"
#include "isac/waveform.hpp"

#include <doctest.h>

#include <random>

using namespace isac;

namespace {

IqBuffer white(Eigen::Index n, double fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, std::sqrt(0.5));
  CVec x(n);
  for (auto& v : x) v = {g(rng), g(rng)};
  return {x, fs};
}

CommChannelConfig clean() {
  CommChannelConfig c;
  c.k_factor_db = kInf;
  c.nlos_path_count = 0;
  c.crosspol_leakage_db = -kInf;
  c.snr_db = kInf;
  c.carrier_freq = 2.4e9;
  return c;
}

double power(const CVec& x) { return x.squaredNorm() / static_cast<double>(x.size()); }

}  // namespace

TEST_CASE("apply_comm_channel: pure LOS is a complex gain") {
  const CommChannelConfig cfg = clean();
  const IqBuffer xv = white(1000, 80e6, 1), xh = white(1000, 80e6, 2);
  const ChannelRealization r = draw_realization(cfg, 7);
  CHECK(std::abs(r.los_gain_v) == doctest::Approx(1.0));
  const CommChannelOutput out = apply_comm_channel(xv, xh, cfg, r, 3);
  CHECK((out.rx_v.samples - r.los_gain_v * xv.samples).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((out.rx_h.samples - r.los_gain_h * xh.samples).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(out.noise_var_v == 0.0);
  CHECK(out.interference_var_v == 0.0);
}

TEST_CASE("apply_comm_channel: LOS Doppler rotates at 2400 Hz") {
  CommChannelConfig cfg = clean();
  cfg.los_doppler = 2400;
  const double fs = 80e6;
  const IqBuffer x = white(4000, fs, 4);
  const CommChannelOutput out = apply_comm_channel(x, x, cfg, identity_realization(cfg), 0);
  for (Eigen::Index n : {0, 1, 1000, 3999}) {
    const cdouble expect = x.samples[n] * std::polar(1.0, 2 * kPi * 2400 * n / fs);
    CHECK(std::abs(out.rx_v.samples[n] - expect) < 1e-12);
  }
}

TEST_CASE("apply_comm_channel: integer delay with carrier phase") {
  CommChannelConfig cfg = clean();
  const double fs = 80e6;
  cfg.los_delay = 5 / fs;
  const IqBuffer x = white(200, fs, 5);
  const CommChannelOutput out = apply_comm_channel(x, x, cfg, identity_realization(cfg), 0);
  const cdouble rot = std::polar(1.0, -2 * kPi * cfg.carrier_freq * cfg.los_delay);
  for (Eigen::Index n = 0; n < 5; ++n) CHECK(std::abs(out.rx_v.samples[n]) == 0.0);
  for (Eigen::Index n = 5; n < 200; ++n) CHECK(std::abs(out.rx_v.samples[n] - rot * x.samples[n - 5]) < 1e-12);
}

TEST_CASE("apply_comm_channel: Rician power averages to one") {
  CommChannelConfig cfg = clean();
  cfg.k_factor_db = 3;
  cfg.nlos_path_count = 4;
  cfg.nlos_max_delay = 1e-7;
  const IqBuffer x = white(8000, 80e6, 6);
  const double px = power(x.samples);
  double acc = 0;
  for (int t = 0; t < 500; ++t) {
    const ChannelRealization r = draw_realization(cfg, 100 + t);
    acc += power(apply_comm_channel(x, x, cfg, r, 0).rx_v.samples) / px;
  }
  CHECK(acc / 500 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("apply_comm_channel: LOS to NLOS power ratio equals K") {
  CommChannelConfig cfg = clean();
  cfg.k_factor_db = 3;
  cfg.nlos_path_count = 4;
  cfg.nlos_max_delay = 1e-7;
  const IqBuffer x = white(2000, 80e6, 7);
  double los = 0, nlos = 0;
  for (int t = 0; t < 1000; ++t) {
    const ChannelRealization r = draw_realization(cfg, 5000 + t);
    ChannelRealization los_only = r;
    los_only.nlos_gains_v.setZero();
    los_only.nlos_gains_h.setZero();
    const CVec all = apply_comm_channel(x, x, cfg, r, 0).rx_v.samples;
    const CVec l = apply_comm_channel(x, x, cfg, los_only, 0).rx_v.samples;
    los += power(l);
    nlos += power(all - l);
  }
  CHECK(los / nlos == doctest::Approx(from_db10(3)).epsilon(0.05));
}

TEST_CASE("apply_comm_channel: cross-pol leakage at -14 dB") {
  CommChannelConfig cfg = clean();
  cfg.crosspol_leakage_db = -14;
  const IqBuffer xh = white(5000, 80e6, 8);
  const IqBuffer xv{CVec::Zero(5000), 80e6};
  const ChannelRealization r = draw_realization(cfg, 9);
  const CommChannelOutput out = apply_comm_channel(xv, xh, cfg, r, 0);
  const double ratio = power(out.rx_v.samples) / power(xh.samples);
  CHECK(ratio == doctest::Approx(from_db10(-14)).epsilon(0.05));
  CHECK(out.interference_var_v == doctest::Approx(from_db10(-14) * power(xh.samples)).epsilon(1e-9));
}

TEST_CASE("apply_comm_channel: noise variance follows the received power") {
  CommChannelConfig cfg = clean();
  cfg.snr_db = 10;
  const IqBuffer x = white(200000, 80e6, 10);
  const ChannelRealization r = identity_realization(cfg);
  const CommChannelOutput out = apply_comm_channel(x, x, cfg, r, 11);
  CHECK(out.noise_var_v == doctest::Approx(power(x.samples) / 10).epsilon(1e-9));
  CHECK(power(out.rx_v.samples - x.samples) == doctest::Approx(out.noise_var_v).epsilon(0.03));
}

TEST_CASE("apply_comm_channel: mismatched inputs throw") {
  const CommChannelConfig cfg = clean();
  CHECK_THROWS_AS(
      apply_comm_channel(white(10, 1e6, 1), white(11, 1e6, 1), cfg, identity_realization(cfg), 0), Error);
  CHECK_THROWS_AS(
      apply_comm_channel(white(10, 1e6, 1), white(10, 2e6, 1), cfg, identity_realization(cfg), 0), Error);
}

TEST_CASE("draw_realization: deterministic per seed, fixed within a frame") {
  CommChannelConfig cfg;
  const ChannelRealization a = draw_realization(cfg, 42), b = draw_realization(cfg, 42);
  CHECK(a.los_gain_v == b.los_gain_v);
  CHECK((a.nlos_gains_v - b.nlos_gains_v).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.nlos_delays == b.nlos_delays);
  const ChannelRealization c = draw_realization(cfg, 43);
  CHECK(a.los_gain_v != c.los_gain_v);
  for (double d : a.nlos_delays) {
    CHECK(d >= 0);
    CHECK(d <= cfg.nlos_max_delay);
  }
}

TEST_CASE("CommChannelConfig::validate") {
  CommChannelConfig c;
  CHECK_NOTHROW(c.validate(10e-6));
  c.crosspol_leakage_db = 1;
  CHECK_THROWS_AS(c.validate(10e-6), Error);
  c = {};
  c.nlos_max_delay = 20e-6;
  CHECK_THROWS_AS(c.validate(10e-6), Error);
  c = {};
  c.nlos_delays = {1e-6};
  CHECK_THROWS_AS(c.validate(10e-6), Error);
  c = {};
  c.k_factor_db = std::nan("");
  CHECK_THROWS_AS(c.validate(10e-6), Error);
}

TEST_CASE("add_awgn: passthrough, variance and determinism") {
  const IqBuffer x = white(1000000, 1e6, 12);
  const double px = power(x.samples);
  const IqBuffer same = add_awgn(x, kInf, 1);
  CHECK((same.samples - x.samples).cwiseAbs().maxCoeff() == 0.0);

  const IqBuffer unit{x.samples / std::sqrt(px), x.sample_rate};
  const IqBuffer y = add_awgn(unit, 0.0, 77);
  const CVec n = y.samples - unit.samples;
  CHECK(power(n) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(n.real().squaredNorm() / n.imag().squaredNorm() == doctest::Approx(1.0).epsilon(0.03));

  const IqBuffer y2 = add_awgn(unit, 0.0, 77);
  CHECK((y.samples - y2.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(add_awgn(IqBuffer{CVec::Zero(10), 1.0}, 10.0, 1), Error);
}

TEST_CASE("radar echo: zero range and zero velocity returns tx") {
  const Codebook cb = build_codebook({});
  const IqBuffer tx = pilot_chirp(cb);
  RadarEchoConfig ec;
  const IqBuffer echo = apply_radar_echo(tx, {{0.0, 0.0, 0.0}}, ec);
  CHECK((echo.samples - tx.samples).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("radar echo: delay and Doppler arithmetic") {
  CHECK(round_trip_delay(11.0) == doctest::Approx(73.38e-9).epsilon(1e-3));
  CHECK(round_trip_delay(11.0) == 2 * 11.0 / 299792458.0);
  // 4800 Hz with c rounded to 3e8
  CHECK(doppler_shift(30, 24e9) == doctest::Approx(4800).epsilon(1e-3));
  CHECK(doppler_shift(30, 24e9) == doctest::Approx(2 * 30 * 24e9 / 299792458.0));
}

TEST_CASE("radar echo: integer delay is a shift with carrier phase") {
  const Codebook cb = build_codebook({});
  const IqBuffer tx = pilot_chirp(cb);
  const double fs = cb.sample_rate;
  const double range = 10 * kSpeedOfLight / (2 * fs);
  RadarEchoConfig ec;
  const IqBuffer echo = apply_radar_echo(tx, {{range, 0.0, -6.0}}, ec);
  const cdouble g = from_db10(-6.0 / 2) * std::polar(1.0, -2 * kPi * ec.carrier_freq * round_trip_delay(range));
  for (Eigen::Index n = 0; n < 10; ++n) CHECK(std::abs(echo.samples[n]) < 1e-9);
  double err = 0;
  for (Eigen::Index n = 10; n < tx.size(); ++n) err = std::max(err, std::abs(echo.samples[n] - g * tx.samples[n - 10]));
  CHECK(err < 1e-9);
}

TEST_CASE("radar echo: slow-time phase advances by 2 pi f_D T_c") {
  const Codebook cb = build_codebook({});
  const IqBuffer tx = pilot_chirp(cb);
  const double range = 20 * kSpeedOfLight / (2 * cb.sample_rate);
  const RadarTarget t{range, 30.0, 0.0};
  RadarEchoConfig ec;
  const double fd = doppler_shift(t.velocity, ec.carrier_freq);
  const IqBuffer first = apply_radar_echo(tx, {t}, ec);
  for (int i = 1; i < 5; ++i) {
    ec.start_time = i * cb.chirp_duration;
    const IqBuffer e = apply_radar_echo(tx, {t}, ec);
    const cdouble ratio = first.samples.tail(100).dot(e.samples.tail(100));  // conj(first) . e
    const double expect = std::remainder(2 * kPi * fd * i * cb.chirp_duration, 2 * kPi);
    CHECK(std::abs(std::remainder(std::arg(ratio) - expect, 2 * kPi)) < 1e-6);
  }
}

TEST_CASE("radar echo: fractional delay matches a delayed tone") {
  const double fs = 80e6, f0 = 3e6;
  CVec x(2000);
  for (int n = 0; n < 2000; ++n) x[n] = std::polar(1.0, 2 * kPi * f0 * n / fs);
  const double tau = 7.3 / fs;
  const CVec y = delay_samples(x, tau, fs);
  double err = 0;
  for (int n = 200; n < 1800; ++n) err = std::max(err, std::abs(y[n] - x[n] * std::polar(1.0, -2 * kPi * f0 * tau)));
  CHECK(err < 1e-2);
  for (int n = 0; n < 7; ++n) CHECK(std::abs(y[n]) == 0.0);
}

TEST_CASE("radar echo: target beyond one chirp throws") {
  const Codebook cb = build_codebook({});
  const IqBuffer tx = pilot_chirp(cb);
  const double too_far = kSpeedOfLight * cb.chirp_duration / 2 + 1;
  CHECK_THROWS_AS(apply_radar_echo(tx, {{too_far, 0.0, 0.0}}, {}), Error);
}

TEST_CASE("radar echo: AWGN referenced to the echo power") {
  const Codebook cb = build_codebook({});
  const IqBuffer tx = pilot_chirp(cb);
  RadarEchoConfig ec;
  ec.snr_db = 0;
  ec.seed = 5;
  const IqBuffer a = apply_radar_echo(tx, {{0.0, 0.0, 0.0}}, ec);
  const IqBuffer b = apply_radar_echo(tx, {{0.0, 0.0, 0.0}}, ec);
  CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK(power(a.samples - tx.samples) == doctest::Approx(1.0).epsilon(0.15));
}
