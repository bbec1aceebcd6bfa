#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include "freqnet/tensor.hpp"

namespace freqnet {

// 2D discrete Fourier / Hartley transforms over the last two axes with a
// DC-centered layout and unitary scaling (1/sqrt(HW) in each direction).
//
// Both the frequency index and the spatial index are measured relative to
// floor(N/2), i.e. the forward transform is P.F.P^-1 where P is the fftshift
// permutation. That conjugation keeps the Hartley transform an exact
// involution and places low frequencies in a contiguous center block, so
// cropping a window around DC is a plain slice. Callers never see the raw
// (DC-at-zero) layout.
//
// All functions here are pure; differentiability of the layers built on top
// comes from the adjoint identities (the adjoint of dft2 on real input is
// idft2, and dht2 is self-adjoint), which the tests verify directly.

template <typename T>
struct ComplexSpectrum {
  Shape shape;  // (..., H, W)
  std::vector<T> re, im;

  std::int64_t height() const { return shape[shape.size() - 2]; }
  std::int64_t width() const { return shape.back(); }
  std::int64_t planes() const { return numel(shape) / (height() * width()); }
  std::int64_t size() const { return numel(shape); }

  double norm2() const {
    double acc = 0;
    for (std::size_t i = 0; i < re.size(); ++i)
      acc += static_cast<double>(re[i]) * re[i] + static_cast<double>(im[i]) * im[i];
    return std::sqrt(acc);
  }
};

namespace fftdetail {

inline std::int64_t smallest_factor(std::int64_t n) {
  for (std::int64_t p = 2; p * p <= n; ++p)
    if (n % p == 0) return p;
  return n;
}

// exp(-2*pi*i*j/n) for j in [0, n), cached per length.
inline const std::vector<std::complex<double>>& unit_roots(std::int64_t n) {
  thread_local std::map<std::int64_t, std::vector<std::complex<double>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> roots(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    roots[static_cast<std::size_t>(j)] = {std::cos(angle), std::sin(angle)};
  }
  return cache.emplace(n, std::move(roots)).first->second;
}

inline std::complex<double> root(std::int64_t n, std::int64_t exponent, int sign) {
  const auto& roots = unit_roots(n);
  auto w = roots[static_cast<std::size_t>(exponent % n)];
  return sign < 0 ? w : std::conj(w);
}

template <typename T>
void dft_naive(const std::complex<T>* in, std::int64_t stride, std::complex<T>* out,
               std::int64_t n, int sign) {
  for (std::int64_t k = 0; k < n; ++k) {
    std::complex<double> acc{0, 0};
    for (std::int64_t j = 0; j < n; ++j)
      acc += std::complex<double>(in[j * stride]) * root(n, (j * k) % n, sign);
    out[k] = std::complex<T>(acc);
  }
}

// Mixed-radix decimation in time. Smooth lengths run in O(n log n); a prime
// length falls back to the O(n^2) direct sum, which is still exact.
template <typename T>
void fft_rec(const std::complex<T>* in, std::int64_t stride, std::complex<T>* out,
             std::int64_t n, int sign, std::complex<T>* scratch) {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const std::int64_t p = smallest_factor(n);
  if (p == n) {
    dft_naive(in, stride, out, n, sign);
    return;
  }
  const std::int64_t m = n / p;
  for (std::int64_t r = 0; r < p; ++r)
    fft_rec(in + r * stride, stride * p, out + r * m, m, sign, scratch);
  for (std::int64_t k = 0; k < n; ++k) {
    std::complex<double> acc{0, 0};
    for (std::int64_t r = 0; r < p; ++r)
      acc += std::complex<double>(out[r * m + (k % m)]) * root(n, (r * k) % n, sign);
    scratch[k] = std::complex<T>(acc);
  }
  for (std::int64_t k = 0; k < n; ++k) out[k] = scratch[k];
}

// In-place 2D complex FFT over a row-major H x W plane.
template <typename T>
void fft2_plane(std::complex<T>* plane, std::int64_t h, std::int64_t w, int sign,
                std::vector<std::complex<T>>& work) {
  const std::int64_t longest = std::max(h, w);
  work.resize(static_cast<std::size_t>(2 * longest));
  std::complex<T>* out = work.data();
  std::complex<T>* scratch = work.data() + longest;
  for (std::int64_t r = 0; r < h; ++r) {
    fft_rec(plane + r * w, 1, out, w, sign, scratch);
    for (std::int64_t c = 0; c < w; ++c) plane[r * w + c] = out[c];
  }
  for (std::int64_t c = 0; c < w; ++c) {
    fft_rec(plane + c, w, out, h, sign, scratch);
    for (std::int64_t r = 0; r < h; ++r) plane[r * w + c] = out[r];
  }
}

// dst[u] = src[(u + shift) mod n] along both axes of a plane.
template <typename Src, typename Dst, typename Fn>
void rotate2(const Src* src, Dst* dst, std::int64_t h, std::int64_t w, std::int64_t sh,
             std::int64_t sw, Fn&& convert) {
  for (std::int64_t u = 0; u < h; ++u) {
    const std::int64_t r = (u + sh) % h;
    for (std::int64_t v = 0; v < w; ++v)
      dst[u * w + v] = convert(src[r * w + (v + sw) % w]);
  }
}

inline void check_plane_shape(const Shape& shape, const char* op) {
  if (shape.size() < 2)
    throw ShapeError(std::string(op) + ": expected at least 2 dimensions, got " + shape_str(shape));
  if (shape[shape.size() - 2] < 1 || shape.back() < 1)
    throw ShapeError(std::string(op) + ": spatial extents must be positive in " + shape_str(shape));
}

}  // namespace fftdetail

template <typename T>
ComplexSpectrum<T> dft2(const Tensor<T>& x) {
  fftdetail::check_plane_shape(x.shape(), "dft2");
  const Shape& shape = x.shape();
  const std::int64_t h = shape[shape.size() - 2];
  const std::int64_t w = shape.back();
  const std::int64_t planes = numel(shape) / (h * w);
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(h * w)));

  ComplexSpectrum<T> out;
  out.shape = shape;
  out.re.resize(static_cast<std::size_t>(numel(shape)));
  out.im.resize(out.re.size());

  std::vector<std::complex<T>> plane(static_cast<std::size_t>(h * w));
  std::vector<std::complex<T>> shifted(plane.size());
  std::vector<std::complex<T>> work;
  const T* src = x.data().data();
  for (std::int64_t b = 0; b < planes; ++b) {
    const T* xp = src + b * h * w;
    // ifftshift of the spatial indices, then FFT, then fftshift of the
    // frequency indices; see the header comment.
    fftdetail::rotate2(xp, plane.data(), h, w, h / 2, w / 2,
                       [](T v) { return std::complex<T>(v, T(0)); });
    fftdetail::fft2_plane(plane.data(), h, w, -1, work);
    fftdetail::rotate2(plane.data(), shifted.data(), h, w, (h + 1) / 2, (w + 1) / 2,
                       [](std::complex<T> v) { return v; });
    T* re = out.re.data() + b * h * w;
    T* im = out.im.data() + b * h * w;
    for (std::int64_t i = 0; i < h * w; ++i) {
      re[i] = shifted[static_cast<std::size_t>(i)].real() * scale;
      im[i] = shifted[static_cast<std::size_t>(i)].imag() * scale;
    }
  }
  return out;
}

// Full complex inverse; used by oracles and by idft2 below.
template <typename T>
ComplexSpectrum<T> idft2_complex(const ComplexSpectrum<T>& y) {
  fftdetail::check_plane_shape(y.shape, "idft2");
  const std::int64_t h = y.height();
  const std::int64_t w = y.width();
  const std::int64_t planes = y.planes();
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(h * w)));

  ComplexSpectrum<T> out;
  out.shape = y.shape;
  out.re.resize(y.re.size());
  out.im.resize(y.im.size());

  std::vector<std::complex<T>> plane(static_cast<std::size_t>(h * w));
  std::vector<std::complex<T>> shifted(plane.size());
  std::vector<std::complex<T>> work;
  for (std::int64_t b = 0; b < planes; ++b) {
    const T* re = y.re.data() + b * h * w;
    const T* im = y.im.data() + b * h * w;
    for (std::int64_t u = 0; u < h; ++u) {
      const std::int64_t r = (u + h / 2) % h;
      for (std::int64_t v = 0; v < w; ++v) {
        const std::int64_t src = u * w + v;
        plane[static_cast<std::size_t>(r * w + (v + w / 2) % w)] = {re[src], im[src]};
      }
    }
    fftdetail::fft2_plane(plane.data(), h, w, +1, work);
    fftdetail::rotate2(plane.data(), shifted.data(), h, w, (h + 1) / 2, (w + 1) / 2,
                       [](std::complex<T> v) { return v; });
    T* ore = out.re.data() + b * h * w;
    T* oim = out.im.data() + b * h * w;
    for (std::int64_t i = 0; i < h * w; ++i) {
      ore[i] = shifted[static_cast<std::size_t>(i)].real() * scale;
      oim[i] = shifted[static_cast<std::size_t>(i)].imag() * scale;
    }
  }
  return out;
}

// Real component of the unitary inverse. Asymmetric crops of even-sized
// spectra break Hermitian symmetry, so the imaginary part is discarded; this
// is the documented lossy step of the pooling path.
template <typename T>
Tensor<T> idft2(const ComplexSpectrum<T>& y) {
  auto full = idft2_complex(y);
  return Tensor<T>::from(full.shape, std::move(full.re));
}

// Discrete Hartley transform: Re(dft2) - Im(dft2). With the centered-unitary
// convention above it is its own inverse.
template <typename T>
Tensor<T> dht2(const Tensor<T>& x) {
  auto y = dft2(x);
  std::vector<T> out(y.re.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y.re[i] - y.im[i];
  return Tensor<T>::from(y.shape, std::move(out));
}

namespace fftdetail {

inline void check_crop(std::int64_t H, std::int64_t W, std::int64_t h, std::int64_t w) {
  if (h < 1 || h > H || w < 1 || w > W)
    throw ShapeError("center_crop: target " + std::to_string(h) + "x" + std::to_string(w) +
                     " out of range for spectrum " + std::to_string(H) + "x" + std::to_string(W));
}

// Centered indices k in [-floor(n/2), ceil(n/2)-1] map to slot k + floor(n/2),
// so the retained window [-floor(m/2), ceil(m/2)-1] starts at floor(n/2)-floor(m/2).
inline std::int64_t crop_offset(std::int64_t n, std::int64_t m) { return n / 2 - m / 2; }

template <typename T>
void crop_plane(const T* src, T* dst, std::int64_t H, std::int64_t W, std::int64_t h,
                std::int64_t w) {
  const std::int64_t oh = crop_offset(H, h), ow = crop_offset(W, w);
  for (std::int64_t u = 0; u < h; ++u)
    for (std::int64_t v = 0; v < w; ++v) dst[u * w + v] = src[(u + oh) * W + (v + ow)];
}

template <typename T>
void pad_plane(const T* src, T* dst, std::int64_t h, std::int64_t w, std::int64_t H,
               std::int64_t W) {
  const std::int64_t oh = crop_offset(H, h), ow = crop_offset(W, w);
  for (std::int64_t u = 0; u < h; ++u)
    for (std::int64_t v = 0; v < w; ++v) dst[(u + oh) * W + (v + ow)] = src[u * w + v];
}

inline Shape with_plane(const Shape& shape, std::int64_t h, std::int64_t w) {
  Shape out = shape;
  out[out.size() - 2] = h;
  out.back() = w;
  return out;
}

}  // namespace fftdetail

// Keeps the h x w window centered on DC. The DC coefficient is always
// retained; for even extents the window holds one extra negative frequency.
template <typename T>
ComplexSpectrum<T> center_crop(const ComplexSpectrum<T>& y, std::int64_t h, std::int64_t w) {
  const std::int64_t H = y.height(), W = y.width();
  fftdetail::check_crop(H, W, h, w);
  ComplexSpectrum<T> out;
  out.shape = fftdetail::with_plane(y.shape, h, w);
  out.re.resize(static_cast<std::size_t>(numel(out.shape)));
  out.im.resize(out.re.size());
  for (std::int64_t b = 0; b < y.planes(); ++b) {
    fftdetail::crop_plane(y.re.data() + b * H * W, out.re.data() + b * h * w, H, W, h, w);
    fftdetail::crop_plane(y.im.data() + b * H * W, out.im.data() + b * h * w, H, W, h, w);
  }
  return out;
}

template <typename T>
Tensor<T> center_crop(const Tensor<T>& y, std::int64_t h, std::int64_t w) {
  fftdetail::check_plane_shape(y.shape(), "center_crop");
  const Shape& shape = y.shape();
  const std::int64_t H = shape[shape.size() - 2], W = shape.back();
  fftdetail::check_crop(H, W, h, w);
  Shape out_shape = fftdetail::with_plane(shape, h, w);
  std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
  const std::int64_t planes = numel(shape) / (H * W);
  for (std::int64_t b = 0; b < planes; ++b)
    fftdetail::crop_plane(y.data().data() + b * H * W, out.data() + b * h * w, H, W, h, w);
  return Tensor<T>::from(std::move(out_shape), std::move(out));
}

// Adjoint of center_crop: places the small spectrum back in the centered
// window of an H x W plane of zeros.
template <typename T>
ComplexSpectrum<T> center_pad(const ComplexSpectrum<T>& y, std::int64_t H, std::int64_t W) {
  const std::int64_t h = y.height(), w = y.width();
  fftdetail::check_crop(H, W, h, w);
  ComplexSpectrum<T> out;
  out.shape = fftdetail::with_plane(y.shape, H, W);
  out.re.assign(static_cast<std::size_t>(numel(out.shape)), T(0));
  out.im.assign(out.re.size(), T(0));
  for (std::int64_t b = 0; b < y.planes(); ++b) {
    fftdetail::pad_plane(y.re.data() + b * h * w, out.re.data() + b * H * W, h, w, H, W);
    fftdetail::pad_plane(y.im.data() + b * h * w, out.im.data() + b * H * W, h, w, H, W);
  }
  return out;
}

template <typename T>
Tensor<T> center_pad(const Tensor<T>& y, std::int64_t H, std::int64_t W) {
  fftdetail::check_plane_shape(y.shape(), "center_pad");
  const Shape& shape = y.shape();
  const std::int64_t h = shape[shape.size() - 2], w = shape.back();
  fftdetail::check_crop(H, W, h, w);
  Shape out_shape = fftdetail::with_plane(shape, H, W);
  std::vector<T> out(static_cast<std::size_t>(numel(out_shape)), T(0));
  const std::int64_t planes = numel(shape) / (h * w);
  for (std::int64_t b = 0; b < planes; ++b)
    fftdetail::pad_plane(y.data().data() + b * h * w, out.data() + b * H * W, h, w, H, W);
  return Tensor<T>::from(std::move(out_shape), std::move(out));
}

}  // namespace freqnet
