#pragma once

#include "ssi/core/tensor.hpp"
#include "ssi/dsp/config.hpp"
#include "ssi/dsp/waveform.hpp"

namespace ssi::metrics {

// Results are clamped to +-kDbCap; zero distortion reports the cap.
inline constexpr double kDbCap = 100.0;

// 10 log10(|s|^2 / |s - s_hat|^2) over the common prefix of both signals.
double sdr(const dsp::Waveform& ref, const dsp::Waveform& est);
// SDR after projecting the estimate onto the reference.
double si_sdr(const dsp::Waveform& ref, const dsp::Waveform& est);

inline constexpr std::size_t kMcdCoefficients = 12;

// Orthonormal DCT-II of each row of a [T, C] matrix.
Tensor dct2_rows(const Tensor& x);
// Mean over aligned frames of (10/ln10) sqrt(2 sum_{d=1..12} (c_d - c'_d)^2),
// where c are DCT-II cepstra of the log-mel rows. Frames beyond the shorter
// input are ignored.
double mcd_from_log_mel(const Tensor& ref, const Tensor& est);
double mcd(const dsp::Waveform& ref, const dsp::Waveform& est, const dsp::DspConfig& cfg = {});

}  // namespace ssi::metrics
