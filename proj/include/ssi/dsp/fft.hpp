#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace ssi::dsp {

// Real-input FFT of a fixed even size backed by FFTW. Each instance owns its
// plans and buffers, so separate instances may be used from separate threads.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }

  // in: n real samples; out: n/2+1 bins (unnormalised forward transform).
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // in: n/2+1 bins of a Hermitian spectrum; out: n samples, scaled by 1/n.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_;
  void* complex_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace ssi::dsp
