#pragma once

#include <vector>

namespace ssi::dsp {

struct Waveform {
  std::vector<double> samples;
  double sample_rate = 22050.0;

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }
};

}  // namespace ssi::dsp
