#pragma once

#include "ssi/dsp/waveform.hpp"

namespace ssi::dsp {

// Band-limited (Blackman-windowed sinc) resampling. Output length is
// round(n * target / source). Filter taps are renormalised at every output
// sample, so constant signals are reproduced exactly up to rounding.
Waveform resample(const Waveform& wav, double target_rate);

}  // namespace ssi::dsp
