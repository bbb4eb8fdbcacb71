#pragma once

// Numerical kernels shared by the transmitter, channel and both receivers.
//
// Every signal travels as an IqBuffer (complex baseband samples plus the
// sample rate). Frequencies are in Hz, times in seconds, angles in radians.
// Whenever an argmax is taken, the lowest index wins ties.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

template <typename Scalar>
using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using RVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CVec = CVector<double>;
using RVec = RVector<double>;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using cdouble = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299'792'458.0;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct BasicIqBuffer {
  CVector<Scalar> samples;
  Scalar sample_rate{1};

  BasicIqBuffer() = default;
  BasicIqBuffer(CVector<Scalar> s, Scalar fs) : samples(std::move(s)), sample_rate(fs) {}

  Eigen::Index size() const { return samples.size(); }
  bool empty() const { return samples.size() == 0; }
  Scalar duration() const { return static_cast<Scalar>(samples.size()) / sample_rate; }
  Scalar mean_power() const {
    return empty() ? Scalar(0) : samples.squaredNorm() / static_cast<Scalar>(samples.size());
  }
  BasicIqBuffer slice(Eigen::Index start, Eigen::Index count) const {
    return {samples.segment(start, count), sample_rate};
  }
};
using IqBuffer = BasicIqBuffer<double>;

// Bins of an unnormalized DFT; bin k sits at origin + k * bin_spacing (mod fs).
template <typename Scalar>
struct BasicSpectrum {
  CVector<Scalar> bins;
  Scalar bin_spacing{1};
  Scalar origin{0};

  Eigen::Index size() const { return bins.size(); }
  // Signed frequency of bin k, folded into [-fs/2, fs/2).
  Scalar frequency(Eigen::Index k) const {
    const auto n = bins.size();
    const Eigen::Index kk = (k >= (n + 1) / 2) ? k - n : k;
    return origin + static_cast<Scalar>(kk) * bin_spacing;
  }
};
using Spectrum = BasicSpectrum<double>;

namespace detail {

template <typename Scalar>
void require_signal(const BasicIqBuffer<Scalar>& x, const char* what) {
  if (x.empty()) throw Error(std::string(what) + ": empty input");
  if (!(x.sample_rate > 0)) throw Error(std::string(what) + ": sample_rate must be positive");
}

inline Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Sum_n x[n] exp(-j 2 pi f n / fs); no range checks. Uses a rotating phasor
// that is resynchronised every 512 samples to keep rounding below 1e-13.
template <typename Scalar>
std::complex<Scalar> dtft_sum(const CVector<Scalar>& x, Scalar f, Scalar fs) {
  using C = std::complex<Scalar>;
  const Scalar w = -2 * std::numbers::pi_v<Scalar> * f / fs;
  const C step = std::polar(Scalar(1), w);
  C acc(0);
  C phasor(1);
  const Eigen::Index n = x.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((i & 511) == 0) phasor = std::polar(Scalar(1), w * static_cast<Scalar>(i));
    acc += x[i] * phasor;
    phasor *= step;
  }
  return acc;
}

}  // namespace detail

template <typename Scalar>
CVector<Scalar> fft(const CVector<Scalar>& x, Eigen::Index length = 0) {
  Eigen::FFT<Scalar> engine;
  CVector<Scalar> in = x;
  if (length > 0 && length != x.size()) {
    in = CVector<Scalar>::Zero(length);
    const auto n = std::min(length, x.size());
    in.head(n) = x.head(n);
  }
  if (in.size() <= 1) return in;  // kissfft faults on length 1
  CVector<Scalar> out;
  engine.fwd(out, in);
  return out;
}

// Inverse DFT including the 1/N factor.
template <typename Scalar>
CVector<Scalar> ifft(const CVector<Scalar>& X) {
  if (X.size() <= 1) return X;
  Eigen::FFT<Scalar> engine;
  CVector<Scalar> out;
  engine.inv(out, X);
  return out;
}

template <typename Scalar>
BasicSpectrum<Scalar> forward_spectrum(const BasicIqBuffer<Scalar>& x) {
  detail::require_signal(x, "forward_spectrum");
  return {fft<Scalar>(x.samples), x.sample_rate / static_cast<Scalar>(x.size()), Scalar(0)};
}

template <typename Scalar>
BasicIqBuffer<Scalar> inverse_spectrum(const BasicSpectrum<Scalar>& s) {
  if (s.size() == 0) throw Error("inverse_spectrum: empty spectrum");
  return {ifft<Scalar>(s.bins), s.bin_spacing * static_cast<Scalar>(s.size())};
}

// result[k] = sum_n x[n] exp(-j 2 pi freqs[k] (n - time_origin) / fs).
// time_origin is in samples and defaults to the first sample.
template <typename Scalar>
CVector<Scalar> dtft_at(const BasicIqBuffer<Scalar>& x, const std::vector<Scalar>& freqs,
                        Scalar time_origin = 0) {
  detail::require_signal(x, "dtft_at");
  const Scalar nyquist = x.sample_rate / 2;
  CVector<Scalar> out(static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const Scalar f = freqs[k];
    if (std::abs(f) > nyquist * (1 + 1e-12))
      throw Error("dtft_at: frequency " + std::to_string(f) + " Hz outside the Nyquist band");
    auto v = detail::dtft_sum(x.samples, f, x.sample_rate);
    if (time_origin != 0)
      v *= std::polar(Scalar(1), 2 * std::numbers::pi_v<Scalar> * f * time_origin / x.sample_rate);
    out[static_cast<Eigen::Index>(k)] = v;
  }
  return out;
}

enum class ConvMode { Full, Same };

// Linear convolution of kernel `a` with `b`; FFT based once both exceed 64 taps. Same mode keeps len(b)
// samples centred on the kernel (offset (len(a)-1)/2), matching numpy.
template <typename Scalar, typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> convolve_linear(
    const RVector<Scalar>& a, const Eigen::MatrixBase<Derived>& b, ConvMode mode = ConvMode::Full) {
  using Out = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
  if (a.size() == 0 || b.size() == 0) throw Error("convolve_linear: empty operand");
  const Eigen::Index na = a.size();
  const Eigen::Index nb = b.size();
  Out full = Out::Zero(na + nb - 1);
  if (std::min(na, nb) > 64) {
    using R = typename Eigen::NumTraits<Scalar>::Real;
    using C = std::complex<R>;
    const Eigen::Index len = detail::next_pow2(na + nb - 1);
    const CVector<R> A = fft<R>(a.template cast<C>().eval(), len);
    const CVector<R> B = fft<R>(b.derived().template cast<C>().eval(), len);
    const CVector<R> c = ifft<R>(CVector<R>(A.cwiseProduct(B)));
    if constexpr (Eigen::NumTraits<typename Derived::Scalar>::IsComplex)
      full = c.head(na + nb - 1).template cast<typename Derived::Scalar>();
    else
      full = c.head(na + nb - 1).real().template cast<typename Derived::Scalar>();
  } else {
    for (Eigen::Index i = 0; i < na; ++i) {
      if (a[i] == Scalar(0)) continue;
      full.segment(i, nb) += a[i] * b.derived();
    }
  }
  if (mode == ConvMode::Full) return full;
  return full.segment((na - 1) / 2, nb);
}

struct CorrelationPeak {
  Eigen::Index lag = 0;
  double magnitude = 0;
};

// Correlation magnitude |sum_n received[n + lag] conj(reference[n])| for every
// lag in [0, len(received) - len(reference)].
template <typename Scalar>
RVector<Scalar> xcorr_magnitudes(const BasicIqBuffer<Scalar>& reference,
                                 const BasicIqBuffer<Scalar>& received) {
  detail::require_signal(reference, "xcorr_peak");
  detail::require_signal(received, "xcorr_peak");
  const Eigen::Index m = reference.size();
  const Eigen::Index n = received.size();
  if (m > n) throw Error("xcorr_peak: reference longer than received signal");
  const Eigen::Index lags = n - m + 1;
  RVector<Scalar> mags(lags);
  if (static_cast<double>(m) * static_cast<double>(lags) <= 4.0e6) {
    for (Eigen::Index k = 0; k < lags; ++k)
      mags[k] = std::abs(reference.samples.dot(received.samples.segment(k, m)));
    return mags;
  }
  const Eigen::Index len = detail::next_pow2(n + m);
  const CVector<Scalar> R = fft<Scalar>(received.samples, len);
  const CVector<Scalar> F = fft<Scalar>(reference.samples, len);
  const CVector<Scalar> c = ifft<Scalar>(CVector<Scalar>(R.array() * F.array().conjugate()));
  for (Eigen::Index k = 0; k < lags; ++k) mags[k] = std::abs(c[k]);
  return mags;
}

template <typename Scalar>
CorrelationPeak xcorr_peak(const BasicIqBuffer<Scalar>& reference,
                           const BasicIqBuffer<Scalar>& received) {
  const auto mags = xcorr_magnitudes(reference, received);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < mags.size(); ++k)
    if (mags[k] > mags[best]) best = k;
  return {best, static_cast<double>(mags[best])};
}

template <typename Scalar>
struct BasicPsd {
  RVector<Scalar> freqs;  // ascending, starting at -fs/2
  RVector<Scalar> psd;    // power per Hz, two-sided
  Scalar bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : Scalar(0); }
};
using Psd = BasicPsd<double>;

// Welch estimate with a periodic Hann window. Scaled so that
// sum(psd) * bin_width equals the (window-weighted) mean power of x.
template <typename Scalar>
BasicPsd<Scalar> welch_psd(const BasicIqBuffer<Scalar>& x, Eigen::Index segment_len, Scalar overlap) {
  detail::require_signal(x, "welch_psd");
  if (segment_len < 1) throw Error("welch_psd: segment length must be positive");
  if (segment_len > x.size()) throw Error("welch_psd: segment longer than signal");
  if (!(overlap >= 0 && overlap < 1)) throw Error("welch_psd: overlap must lie in [0, 1)");
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  RVector<Scalar> window(segment_len);
  for (Eigen::Index i = 0; i < segment_len; ++i)
    window[i] = segment_len == 1 ? Scalar(1)
                                 : Scalar(0.5) - Scalar(0.5) * std::cos(two_pi * i / segment_len);
  const Scalar wpow = window.squaredNorm();
  const Eigen::Index step =
      std::max<Eigen::Index>(1, segment_len - static_cast<Eigen::Index>(std::llround(overlap * segment_len)));

  RVector<Scalar> acc = RVector<Scalar>::Zero(segment_len);
  Eigen::Index count = 0;
  CVector<Scalar> seg(segment_len), spec;
  for (Eigen::Index start = 0; start + segment_len <= x.size(); start += step) {
    seg = x.samples.segment(start, segment_len).cwiseProduct(window.template cast<std::complex<Scalar>>());
    spec = fft<Scalar>(seg);
    acc += spec.cwiseAbs2();
    ++count;
  }
  acc /= static_cast<Scalar>(count) * x.sample_rate * wpow;

  BasicPsd<Scalar> out;
  out.freqs.resize(segment_len);
  out.psd.resize(segment_len);
  const Eigen::Index half = segment_len / 2;
  const Scalar df = x.sample_rate / static_cast<Scalar>(segment_len);
  for (Eigen::Index i = 0; i < segment_len; ++i) {
    const Eigen::Index k = (i + segment_len - half) % segment_len;  // fftshift
    out.freqs[i] = static_cast<Scalar>(i - half) * df;
    out.psd[i] = acc[k];
  }
  return out;
}

// Circular moving average of odd width over a real vector.
template <typename Scalar>
RVector<Scalar> circular_moving_average(const RVector<Scalar>& v, int width) {
  if (width <= 1 || v.size() == 0) return v;
  const Eigen::Index n = v.size();
  const int half = width / 2;
  RVector<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar s = 0;
    for (int d = -half; d <= half; ++d) s += v[((i + d) % n + n) % n];
    out[i] = s / static_cast<Scalar>(2 * half + 1);
  }
  return out;
}

inline double db10(double ratio) { return 10.0 * std::log10(ratio); }
inline double from_db10(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace isac
