#include "isac/harness.hpp"
#include "isac/radar_rx.hpp"

#include <doctest.h>

#include <chrono>
#include <random>

using namespace isac;

namespace {

// Ranges that land on whole samples keep the echo model exact.
double sample_range(int samples, double fs) { return samples * kSpeedOfLight / (2 * fs); }

struct Scene {
  Codebook cb;
  std::vector<ChirpParams> params;
  std::vector<IqBuffer> deramped;
};

Scene make_scene(const CodebookConfig& c, const std::vector<RadarTarget>& targets, int chirps, std::uint64_t seed,
                 bool hop_bandwidth = true, bool hop_center = true, double carrier = 24e9) {
  Scene s{build_codebook(c), {}, {}};
  std::mt19937_64 rng(seed);
  for (int i = 0; i < chirps; ++i) {
    ChirpParams p = random_chirp(s.cb, rng);
    if (!hop_bandwidth) p.bandwidth = s.cb.bandwidth_options.front();
    if (!hop_center) p.center_freq = s.cb.center_freq_options.front();
    const IqBuffer tx = synth_chirp(p, s.cb);
    RadarEchoConfig ec;
    ec.carrier_freq = carrier;
    ec.start_time = i * s.cb.chirp_duration;
    s.deramped.push_back(deramp(apply_radar_echo(tx, targets, ec), tx));
    s.params.push_back(p);
  }
  return s;
}

double phase_variance(const CVec& v) {
  std::vector<double> ph;
  const double ref = std::arg(v[0]);
  for (auto z : v) ph.push_back(std::remainder(std::arg(z) - ref, 2 * kPi));
  double mean = 0;
  for (double p : ph) mean += p;
  mean /= static_cast<double>(ph.size());
  double var = 0;
  for (double p : ph) var += (p - mean) * (p - mean);
  return var / static_cast<double>(ph.size());
}

}  // namespace

TEST_CASE("deramp: self-mix is a DC tone") {
  const Codebook cb = build_codebook({});
  std::mt19937_64 rng(1);
  const IqBuffer tx = synth_chirp(random_chirp(cb, rng), cb);
  const IqBuffer y = deramp(tx, tx);
  CHECK((y.samples.array() - cdouble(1, 0)).abs().maxCoeff() < 1e-12);
  Eigen::Index k;
  forward_spectrum(y).bins.cwiseAbs().maxCoeff(&k);
  CHECK(k == 0);
}

TEST_CASE("deramp: 100 m at 50 MHz over 50 us beats at 666.667 kHz") {
  CodebookConfig c;
  c.chirp_duration = 50e-6;
  c.bandwidths = {50e6};
  c.center_freqs = {0.0};
  c.segments = 1;
  const Codebook cb = build_codebook(c);
  const IqBuffer tx = synth_plain_chirp(0, 50e6, cb);
  const IqBuffer y = deramp(apply_radar_echo(tx, {{100.0, 0.0, 0.0}}, {}), tx);
  const double expect = 2 * (50e6 / 50e-6) * 100.0 / kSpeedOfLight;
  CHECK(expect == doctest::Approx(666.667e3).epsilon(1e-3));
  CHECK(std::abs(beat_frequency(50e6 / 50e-6, 100.0)) == doctest::Approx(expect));
  const Spectrum s = forward_spectrum(y);
  Eigen::Index k;
  s.bins.cwiseAbs().maxCoeff(&k);
  CHECK(std::abs(std::abs(s.frequency(k)) - expect) <= s.bin_spacing);
}

TEST_CASE("deramp: phase code cancels against its own reference") {
  CodebookConfig c;
  c.segments = 50;
  c.chirp_duration = 50e-6;
  const Codebook coded = build_codebook(c);
  c.segments = 1;
  const Codebook plain = build_codebook(c);
  std::mt19937_64 rng(2);
  const ChirpParams p = random_chirp(coded, rng);
  ChirpParams q = p;
  q.segment_phases = {0.0};
  const IqBuffer a = deramp(synth_chirp(p, coded), synth_chirp(p, coded));
  const IqBuffer b = deramp(synth_chirp(q, plain), synth_chirp(q, plain));
  CHECK((forward_spectrum(a).bins - forward_spectrum(b).bins).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("deramp: length mismatch throws") {
  CHECK_THROWS_AS(deramp(IqBuffer{CVec::Ones(4), 1.0}, IqBuffer{CVec::Ones(5), 1.0}), Error);
}

TEST_CASE("range_grid: uniform and validated against the widest slope") {
  const RangeGrid g = make_range_grid(150, 0.5);
  CHECK(g.size() == 301);
  for (Eigen::Index m = 1; m < g.size(); ++m) CHECK(g.bins[m] - g.bins[m - 1] == doctest::Approx(0.5));
  CHECK(g.nearest(10.2) == 20);
  const Codebook cb = build_codebook({});
  std::vector<ChirpParams> params{make_chirp_params(cb.used_entry_count() - 1, std::vector<int>(cb.segments, 0),
                                                    Polarization::V, cb)};
  CHECK_NOTHROW(validate_range_grid(g, params, cb.sample_rate));
  const double limit = kSpeedOfLight * cb.sample_rate / (2 * params[0].slope());
  CHECK_THROWS_AS(validate_range_grid(make_range_grid(limit * 1.01, 1.0), params, cb.sample_rate), Error);
  CHECK_THROWS_AS(make_range_grid(100, 0), Error);
}

TEST_CASE("range_align: on-grid static target stays in one bin under hopping") {
  CodebookConfig c;
  c.chirp_duration = 50e-6;
  const double fs = c.sample_rate;
  const double r = sample_range(53, fs);
  const RangeGrid grid{RVec::LinSpaced(129, 0, 2 * r), r / 64};
  const Scene s = make_scene(c, {{r, 0, 0}}, 24, 3);
  const CMat a = range_align(s.deramped, s.params, grid);
  for (auto b : per_chirp_peak_bins(a, 0, grid.size() - 1)) CHECK(b == 64);
  const CMat n = naive_range_profile(s.deramped, s.cb.mean_bandwidth() / s.cb.chirp_duration, grid);
  const auto naive = per_chirp_peak_bins(n, 0, grid.size() - 1);
  CHECK(*std::max_element(naive.begin(), naive.end()) - *std::min_element(naive.begin(), naive.end()) >= 1);
}

TEST_CASE("range_align: fixed chirp reduces to a zero-padded FFT") {
  CodebookConfig c;
  c.segments = 1;
  const Codebook cb = build_codebook(c);
  const IqBuffer tx = synth_plain_chirp(0, 40e6, cb);
  const IqBuffer y = deramp(apply_radar_echo(tx, {{37.0, 0, 0}}, {}), tx);
  const ChirpParams p{0, 40e6, cb.chirp_duration, {0.0}, Polarization::V};
  const Eigen::Index len = 4 * y.size();
  const double bin_hz = cb.sample_rate / static_cast<double>(len);
  const double spacing = bin_hz * kSpeedOfLight / (2 * p.slope());
  const RangeGrid grid = make_range_grid(100 * spacing, spacing);
  const CMat a = range_align({y}, {p}, grid);
  const CVec spec = fft<double>(y.samples, len);
  const double origin = static_cast<double>(y.size()) / 2;
  for (Eigen::Index m = 0; m < grid.size(); ++m) {
    const double f = beat_frequency(p.slope(), grid.bins[m]);
    const Eigen::Index k = (len - m) % len;  // f = -m bins
    const cdouble ref = spec[k] * std::polar(1.0, 2 * kPi * f * origin / cb.sample_rate);
    CHECK(std::abs(a(m, 0) - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("range_align: loopback target at 11 m") {
  CodebookConfig c;
  c.chirp_duration = 50e-6;
  const Scene s = make_scene(c, {{11.0, 0, 0}}, 4, 4);
  const RangeGrid grid = make_range_grid(40, kSpeedOfLight / (4 * s.cb.mean_bandwidth()));
  const CMat a = range_align(s.deramped, s.params, grid);
  for (auto b : per_chirp_peak_bins(a, 0, grid.size() - 1)) CHECK(b == grid.nearest(11.0));
}

TEST_CASE("range_align: grid beyond the unambiguous range throws") {
  CodebookConfig c;
  const Scene s = make_scene(c, {{10.0, 0, 0}}, 2, 5);
  CHECK_THROWS_AS(range_align(s.deramped, s.params, make_range_grid(5000, 1.0)), Error);
}

TEST_CASE("phase_correct: no hopping leaves the matrix unchanged") {
  const Codebook cb = build_codebook({});
  const ChirpParams p{cb.mean_center_freq(), cb.mean_bandwidth(), cb.chirp_duration, {0.0}, Polarization::V};
  const RangeGrid grid = make_range_grid(50, 1.0);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  CMat m(grid.size(), 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = {g(rng), g(rng)};
  const CMat out = phase_correct(m, {p, p, p}, grid, cb.mean_center_freq(), cb.mean_bandwidth());
  CHECK((out - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("phase_correct: center hopping phase variance before and after") {
  CodebookConfig c;
  c.chirp_duration = 50e-6;
  c.segments = 1;  // a delayed echo does not cancel the phase code exactly
  const double r = sample_range(53, c.sample_rate);  // about 100 m
  const RangeGrid grid{RVec::LinSpaced(129, 0, 2 * r), r / 64};
  const Scene s = make_scene(c, {{r, 0, 0}}, 32, 7, false, true);
  const CMat a = range_align(s.deramped, s.params, grid);
  const CMat corr = phase_correct(a, s.params, grid, s.cb.mean_center_freq(), s.params[0].bandwidth);
  CHECK(phase_variance(a.row(64).transpose()) > 0.1);
  CHECK(phase_variance(corr.row(64).transpose()) < 1e-10);
}

TEST_CASE("phase_correct: full hopping keeps the Doppler progression") {
  CodebookConfig c;
  c.chirp_duration = 50e-6;
  c.segments = 1;
  const double r = sample_range(53, c.sample_rate);
  const RangeGrid grid{RVec::LinSpaced(129, 0, 2 * r), r / 64};
  const RadarTarget t{r, 30.0, 0.0};
  const Scene s = make_scene(c, {t}, 16, 8);
  const CMat corr = phase_correct(range_align(s.deramped, s.params, grid), s.params, grid, s.cb.mean_center_freq(),
                                  s.cb.mean_bandwidth());
  const double step = 2 * kPi * doppler_shift(t.velocity, 24e9) * s.cb.chirp_duration;
  for (Eigen::Index i = 1; i < corr.cols(); ++i) {
    const double d = std::arg(corr(64, i) * std::conj(corr(64, i - 1)));
    CHECK(std::abs(std::remainder(d - step, 2 * kPi)) < 1e-6);
  }
}

TEST_CASE("doppler_map: static target at zero velocity, moving target in its bin") {
  CodebookConfig c;
  c.chirp_duration = 50e-6;
  const double r = sample_range(53, c.sample_rate);
  const RangeGrid grid{RVec::LinSpaced(129, 0, 2 * r), r / 64};
  for (double v : {0.0, 30.0}) {
    const Scene s = make_scene(c, {{r, v, 0}}, 64, 9);
    const CMat corr = phase_correct(range_align(s.deramped, s.params, grid), s.params, grid, s.cb.mean_center_freq(),
                                    s.cb.mean_bandwidth());
    const RangeDopplerMap map = doppler_map(corr, grid, s.cb.chirp_duration, 24e9);
    const double lambda = kSpeedOfLight / 24e9;
    const double dv = lambda / (2 * 64 * s.cb.chirp_duration);
    CHECK(map.velocity_axis[0] == doctest::Approx(-lambda / (4 * s.cb.chirp_duration)));
    CHECK(map.velocity_axis[1] - map.velocity_axis[0] == doctest::Approx(dv));
    Eigen::Index rb, db;
    map.cells.cwiseAbs().maxCoeff(&rb, &db);
    CHECK(rb == 64);
    CHECK(std::abs(map.velocity_axis[db] - v) <= dv);
  }
}

TEST_CASE("doppler_map: needs two chirps") {
  CHECK_THROWS_AS(doppler_map(CMat::Ones(4, 1), make_range_grid(3, 1), 1e-5, 24e9), Error);
}

TEST_CASE("radar scene: two targets of the reference scene") {
  ScenarioConfig cfg = band_preset("B1");
  cfg.radar.carrier_freq = 24e9;
  cfg.radar.chirp_duration = 50e-6;
  cfg.radar.hann_range = cfg.radar.hann_doppler = true;
  const RadarSceneResult res = run_radar_scene(cfg);
  REQUIRE(res.detections.size() == 2);
  const double dv = res.corrected.velocity_axis[1] - res.corrected.velocity_axis[0];
  for (const auto& t : cfg.radar.targets) {
    bool found = false;
    for (const auto& d : res.detections)
      found |= std::abs(d.range - t.range) <= res.grid.spacing && std::abs(d.velocity - t.velocity) <= dv;
    CHECK(found);
  }
}

TEST_CASE("extract_targets: single target, noise peak, empty map") {
  CodebookConfig c;
  c.chirp_duration = 50e-6;
  const double r = sample_range(53, c.sample_rate);
  const RangeGrid grid{RVec::LinSpaced(129, 0, 2 * r), r / 64};
  const Scene s = make_scene(c, {{r, 0, 0}}, 16, 10);
  const RangeDopplerMap map = doppler_map(
      phase_correct(range_align(s.deramped, s.params, grid, {true}), s.params, grid, s.cb.mean_center_freq(),
                    s.cb.mean_bandwidth()),
      grid, s.cb.chirp_duration, 24e9, true);
  const auto d = extract_targets(map, -10);
  REQUIRE(d.size() == 1);
  CHECK(d[0].range_bin == 64);
  CHECK(d[0].power_db == doctest::Approx(0.0));

  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  RangeDopplerMap noise = map;
  for (Eigen::Index i = 0; i < noise.cells.size(); ++i) noise.cells(i) = {g(rng), g(rng)};
  CHECK(extract_targets(noise, 0).size() == 1);

  RangeDopplerMap empty;
  CHECK_THROWS_AS(extract_targets(empty, -20), Error);
}

TEST_CASE("range_rmse: trivial cases") {
  CHECK(range_rmse({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(range_rmse({2, 3, 4}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(range_rmse({}, {}), Error);
}

TEST_CASE("estimate_range: refines inside a bin") {
  CodebookConfig c;
  c.chirp_duration = 50e-6;
  c.segments = 1;
  const Codebook cb = build_codebook(c);
  std::mt19937_64 rng(12);
  const RangeGrid grid = make_range_grid(150, kSpeedOfLight / (4 * cb.mean_bandwidth()));
  for (double truth : {50.3, 77.77, 120.01}) {
    const ChirpParams p = random_chirp(cb, rng);
    const IqBuffer tx = synth_chirp(p, cb);
    const IqBuffer y = deramp(apply_radar_echo(tx, {{truth, 0, 0}}, {}), tx);
    CHECK(std::abs(estimate_range(y, p.slope(), grid) - truth) < 0.05 * grid.spacing);
  }
}

TEST_CASE("PM transparency: L=1 and L=100 give the same map for a zero-range target") {
  CodebookConfig c;
  c.chirp_duration = 50e-6;
  c.segments = 100;
  const Codebook coded = build_codebook(c);
  c.segments = 1;
  const Codebook plain = build_codebook(c);
  std::mt19937_64 rng(13);
  std::vector<ChirpParams> pc, pp;
  std::vector<IqBuffer> yc, yp;
  for (int i = 0; i < 8; ++i) {
    ChirpParams p = random_chirp(coded, rng);
    ChirpParams q = p;
    q.segment_phases = {0.0};
    RadarEchoConfig ec;
    ec.start_time = i * coded.chirp_duration;
    const IqBuffer tc = synth_chirp(p, coded), tp = synth_chirp(q, plain);
    yc.push_back(deramp(apply_radar_echo(tc, {{0.0, 10.0, 0}}, ec), tc));
    yp.push_back(deramp(apply_radar_echo(tp, {{0.0, 10.0, 0}}, ec), tp));
    pc.push_back(p);
    pp.push_back(q);
  }
  const RangeGrid grid = make_range_grid(30, 1.0);
  const CMat a = range_align(yc, pc, grid), b = range_align(yp, pp, grid);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9 * b.cwiseAbs().maxCoeff());
}

TEST_CASE("range_align: runtime grows linearly in chirps, bins and samples") {
  using clock = std::chrono::steady_clock;
  auto run = [](int chirps, double max_range, double tc) {
    CodebookConfig c;
    c.chirp_duration = tc;
    const Scene s = make_scene(c, {{20.0, 0, 0}}, chirps, 14);
    const RangeGrid grid = make_range_grid(max_range, 0.5);
    double best = 1e9;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = clock::now();
      const CMat a = range_align(s.deramped, s.params, grid);
      best = std::min(best, std::chrono::duration<double>(clock::now() - t0).count());
      CHECK(a.rows() == grid.size());
    }
    return best;
  };
  const double base = run(8, 64, 20e-6);
  const double ratio_c = run(16, 64, 20e-6) / base;
  const double ratio_r = run(8, 128.25, 20e-6) / base;
  const double ratio_s = run(8, 64, 40e-6) / base;
  MESSAGE("scaling ratios " << ratio_c << " " << ratio_r << " " << ratio_s);
  for (double r : {ratio_c, ratio_r, ratio_s}) {
    CHECK(r > 1.4);
    CHECK(r < 2.6);
  }
}
