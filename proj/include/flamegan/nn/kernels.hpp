#pragma once

#include <cstddef>

namespace flamegan::nn::kernels {

/// Geometry of one square-kernel convolution over an H x W x C image.
struct ConvGeometry {
  std::size_t in_h = 0, in_w = 0, channels = 0;
  std::size_t kernel = 1, stride = 1, padding = 0;
  std::size_t out_h = 0, out_w = 0;

  std::size_t patch_size() const { return kernel * kernel * channels; }
  std::size_t positions() const { return out_h * out_w; }
};

/// Output extents follow floor((in + 2p - k) / s) + 1.
ConvGeometry make_geometry(std::size_t in_h, std::size_t in_w, std::size_t channels,
                           std::size_t kernel, std::size_t stride, std::size_t padding);

// Row-major GEMM family. When `accumulate` is false C is overwritten.
//   gemm_nn: C[m x n] = A[m x k] * B[k x n]
//   gemm_tn: C[m x n] = A^T * B  with A stored k x m
//   gemm_nt: C[m x n] = A * B^T  with B stored n x k
template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate);
template <typename Real>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate);
template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate);

/// Unfolds an HWC image into a (out_h*out_w) x (k*k*C) patch matrix with
/// column order (ky, kx, c). Out-of-bounds taps read as zero.
template <typename Real>
void im2col(const Real* image, const ConvGeometry& g, Real* col);

/// Adjoint of im2col: folds a patch matrix back into an HWC image,
/// summing overlapping taps. The image is overwritten.
template <typename Real>
void col2im(const Real* col, const ConvGeometry& g, Real* image);

/// Elementwise y = x * scale + shift.
template <typename Real>
void affine(const Real* x, std::size_t n, Real scale, Real shift, Real* y);

/// Serial reference versions of the kernels above. They are written for
/// clarity and kept to validate the parallel path and for benchmarking.
namespace serial {
template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate);
template <typename Real>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate);
template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate);
template <typename Real>
void im2col(const Real* image, const ConvGeometry& g, Real* col);
template <typename Real>
void col2im(const Real* col, const ConvGeometry& g, Real* image);
template <typename Real>
void affine(const Real* x, std::size_t n, Real scale, Real shift, Real* y);
}  // namespace serial

}  // namespace flamegan::nn::kernels
