#include "isac/dsp.hpp"

namespace isac {

template CVector<double> fft<double>(const CVector<double>&, Eigen::Index);
template CVector<double> ifft<double>(const CVector<double>&);
template BasicSpectrum<double> forward_spectrum<double>(const BasicIqBuffer<double>&);
template BasicIqBuffer<double> inverse_spectrum<double>(const BasicSpectrum<double>&);
template CVector<double> dtft_at<double>(const BasicIqBuffer<double>&, const std::vector<double>&, double);
template RVector<double> xcorr_magnitudes<double>(const BasicIqBuffer<double>&, const BasicIqBuffer<double>&);
template CorrelationPeak xcorr_peak<double>(const BasicIqBuffer<double>&, const BasicIqBuffer<double>&);
template BasicPsd<double> welch_psd<double>(const BasicIqBuffer<double>&, Eigen::Index, double);

}  // namespace isac
