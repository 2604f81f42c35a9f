#pragma once

#include <complex>
#include <cstddef>

#include <fftw3.h>

namespace mlab::fft {

using cplx = std::complex<double>;

// Complex buffer allocated with fftw_malloc so its alignment is what the
// plans were made for. Movable, not copyable.
class Buffer {
 public:
  explicit Buffer(std::size_t n);
  ~Buffer();
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  Buffer(Buffer&& o) noexcept;
  Buffer& operator=(Buffer&& o) noexcept;

  cplx* data() { return p_; }
  const cplx* data() const { return p_; }
  std::size_t size() const { return n_; }
  cplx& operator[](std::size_t i) { return p_[i]; }
  const cplx& operator[](std::size_t i) const { return p_[i]; }
  void zero();

 private:
  cplx* p_ = nullptr;
  std::size_t n_ = 0;
};

// In-place batched 1D c2c transform bound to one buffer. FFTW_ESTIMATE only:
// planning is deterministic and never touches the data. Unnormalized in both
// directions (inverse-after-forward multiplies by the length), callers fold
// the 1/len where it belongs.
class Plan {
 public:
  Plan() = default;
  // howmany transforms of length len over buf: element stride `stride`,
  // consecutive transforms `dist` apart. sign FFTW_FORWARD (-1) = e^{-i...}.
  Plan(cplx* buf, int len, int howmany, int stride, int dist, int sign);
  ~Plan();
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  Plan(Plan&& o) noexcept;
  Plan& operator=(Plan&& o) noexcept;

  void execute() const;

 private:
  fftw_plan h_ = nullptr;
};

// For an (n_rows x row_len) row-major array: transforms along the contiguous
// (row) axis.
Plan rows_plan(cplx* buf, int n_rows, int row_len, int sign);
// Transforms along the strided (column) axis of the same layout.
Plan cols_plan(cplx* buf, int n_rows, int row_len, int sign);

// Signed DFT frequency for slot k of an n-point transform with lattice step
// step: 2*pi*wrap(k)/(n*step), wrap into [-n/2, n/2).
double frequency(int k, int n, double step);

}  // namespace mlab::fft
