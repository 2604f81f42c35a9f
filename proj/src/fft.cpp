#include "mlab/fft.hpp"

#include <cstring>
#include <mutex>
#include <numbers>

#include "mlab/errors.hpp"

namespace mlab::fft {

namespace {
// FFTW plan creation and destruction mutate global planner state; executes
// are thread-safe on distinct plans.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Buffer::Buffer(std::size_t n) : n_(n) {
  p_ = static_cast<cplx*>(fftw_malloc(sizeof(cplx) * n));
  if (!p_) throw numeric_error("fft: allocation failed");
  zero();
}

Buffer::~Buffer() {
  if (p_) fftw_free(p_);
}

Buffer::Buffer(Buffer&& o) noexcept : p_(o.p_), n_(o.n_) {
  o.p_ = nullptr;
  o.n_ = 0;
}

Buffer& Buffer::operator=(Buffer&& o) noexcept {
  if (this != &o) {
    if (p_) fftw_free(p_);
    p_ = o.p_;
    n_ = o.n_;
    o.p_ = nullptr;
    o.n_ = 0;
  }
  return *this;
}

void Buffer::zero() { std::memset(p_, 0, sizeof(cplx) * n_); }

Plan::Plan(cplx* buf, int len, int howmany, int stride, int dist, int sign) {
  auto* d = reinterpret_cast<fftw_complex*>(buf);
  std::lock_guard<std::mutex> lock(planner_mutex());
  h_ = fftw_plan_many_dft(1, &len, howmany, d, nullptr, stride, dist, d, nullptr, stride, dist,
                          sign, FFTW_ESTIMATE);
  if (!h_) throw numeric_error("fft: planning failed");
}

Plan::~Plan() {
  if (h_) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(h_);
  }
}

Plan::Plan(Plan&& o) noexcept : h_(o.h_) { o.h_ = nullptr; }

Plan& Plan::operator=(Plan&& o) noexcept {
  if (this != &o) {
    if (h_) fftw_destroy_plan(h_);
    h_ = o.h_;
    o.h_ = nullptr;
  }
  return *this;
}

void Plan::execute() const { fftw_execute(h_); }

Plan rows_plan(cplx* buf, int n_rows, int row_len, int sign) {
  return Plan(buf, row_len, n_rows, 1, row_len, sign);
}

Plan cols_plan(cplx* buf, int n_rows, int row_len, int sign) {
  return Plan(buf, n_rows, row_len, row_len, 1, sign);
}

double frequency(int k, int n, double step) {
  const int w = k < n / 2 ? k : k - n;
  return 2.0 * std::numbers::pi * w / (n * step);
}

}  // namespace mlab::fft
