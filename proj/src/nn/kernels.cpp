#include "flamegan/nn/kernels.hpp"

#include <algorithm>
#include <cstring>

#include "flamegan/error.hpp"

namespace flamegan::nn::kernels {

namespace {

using Index = std::ptrdiff_t;

}  // namespace

ConvGeometry make_geometry(std::size_t in_h, std::size_t in_w, std::size_t channels,
                           std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (stride == 0) throw DimensionError("stride must be >= 1");
  if (kernel == 0) throw DimensionError("kernel must be >= 1");
  if (in_h + 2 * padding < kernel || in_w + 2 * padding < kernel) {
    throw DimensionError("kernel larger than padded input");
  }
  ConvGeometry g;
  g.in_h = in_h;
  g.in_w = in_w;
  g.channels = channels;
  g.kernel = kernel;
  g.stride = stride;
  g.padding = padding;
  g.out_h = (in_h + 2 * padding - kernel) / stride + 1;
  g.out_w = (in_w + 2 * padding - kernel) / stride + 1;
  return g;
}

template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    Real* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, Real(0));
    const Real* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      if (av == Real(0)) continue;
      const Real* brow = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename Real>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    Real* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, Real(0));
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a[p * m + i];
      if (av == Real(0)) continue;
      const Real* brow = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    const Real* arow = a + i * k;
    Real* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* brow = b + j * k;
      Real sum = 0;
#pragma omp simd reduction(+ : sum)
      for (std::size_t p = 0; p < k; ++p) sum += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + sum : sum;
    }
  }
}

template <typename Real>
void im2col(const Real* image, const ConvGeometry& g, Real* col) {
  const std::size_t cols = g.patch_size();
  const std::size_t run = g.channels;
#pragma omp parallel for schedule(static)
  for (Index oy = 0; oy < static_cast<Index>(g.out_h); ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      Real* dst = col + (oy * g.out_w + ox) * cols;
      for (std::size_t ky = 0; ky < g.kernel; ++ky) {
        const Index iy = oy * static_cast<Index>(g.stride) + static_cast<Index>(ky) -
                         static_cast<Index>(g.padding);
        for (std::size_t kx = 0; kx < g.kernel; ++kx, dst += run) {
          const Index ix = static_cast<Index>(ox * g.stride + kx) - static_cast<Index>(g.padding);
          if (iy < 0 || iy >= static_cast<Index>(g.in_h) || ix < 0 ||
              ix >= static_cast<Index>(g.in_w)) {
            std::fill(dst, dst + run, Real(0));
          } else {
            std::memcpy(dst, image + (iy * g.in_w + ix) * g.channels, run * sizeof(Real));
          }
        }
      }
    }
  }
}

// Gather form: each image pixel sums the patch entries that read it, so rows
// of the image are independent and can be written in parallel.
template <typename Real>
void col2im(const Real* col, const ConvGeometry& g, Real* image) {
  const std::size_t cols = g.patch_size();
  const Index stride = static_cast<Index>(g.stride);
  const Index pad = static_cast<Index>(g.padding);
  const Index kernel = static_cast<Index>(g.kernel);
#pragma omp parallel for schedule(static)
  for (Index iy = 0; iy < static_cast<Index>(g.in_h); ++iy) {
    for (Index ix = 0; ix < static_cast<Index>(g.in_w); ++ix) {
      Real* dst = image + (iy * g.in_w + ix) * g.channels;
      std::fill(dst, dst + g.channels, Real(0));
      for (Index ky = 0; ky < kernel; ++ky) {
        const Index ny = iy + pad - ky;
        if (ny < 0 || ny % stride != 0) continue;
        const Index oy = ny / stride;
        if (oy >= static_cast<Index>(g.out_h)) continue;
        for (Index kx = 0; kx < kernel; ++kx) {
          const Index nx = ix + pad - kx;
          if (nx < 0 || nx % stride != 0) continue;
          const Index ox = nx / stride;
          if (ox >= static_cast<Index>(g.out_w)) continue;
          const Real* src = col + (oy * g.out_w + ox) * cols + (ky * kernel + kx) * g.channels;
#pragma omp simd
          for (std::size_t c = 0; c < g.channels; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

template <typename Real>
void affine(const Real* x, std::size_t n, Real scale, Real shift, Real* y) {
#pragma omp parallel for simd schedule(static)
  for (Index i = 0; i < static_cast<Index>(n); ++i) y[i] = x[i] * scale + shift;
}

namespace serial {

template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real sum = 0;
      for (std::size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

template <typename Real>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real sum = 0;
      for (std::size_t p = 0; p < k; ++p) sum += a[p * m + i] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
             Real* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real sum = 0;
      for (std::size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[j * k + p];
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

template <typename Real>
void im2col(const Real* image, const ConvGeometry& g, Real* col) {
  const std::size_t cols = g.patch_size();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      for (std::size_t ky = 0; ky < g.kernel; ++ky) {
        for (std::size_t kx = 0; kx < g.kernel; ++kx) {
          for (std::size_t c = 0; c < g.channels; ++c) {
            const Index iy = static_cast<Index>(oy * g.stride + ky) - static_cast<Index>(g.padding);
            const Index ix = static_cast<Index>(ox * g.stride + kx) - static_cast<Index>(g.padding);
            const bool inside = iy >= 0 && iy < static_cast<Index>(g.in_h) && ix >= 0 &&
                                ix < static_cast<Index>(g.in_w);
            col[(oy * g.out_w + ox) * cols + (ky * g.kernel + kx) * g.channels + c] =
                inside ? image[(iy * g.in_w + ix) * g.channels + c] : Real(0);
          }
        }
      }
    }
  }
}

template <typename Real>
void col2im(const Real* col, const ConvGeometry& g, Real* image) {
  const std::size_t cols = g.patch_size();
  std::fill(image, image + g.in_h * g.in_w * g.channels, Real(0));
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      for (std::size_t ky = 0; ky < g.kernel; ++ky) {
        for (std::size_t kx = 0; kx < g.kernel; ++kx) {
          const Index iy = static_cast<Index>(oy * g.stride + ky) - static_cast<Index>(g.padding);
          const Index ix = static_cast<Index>(ox * g.stride + kx) - static_cast<Index>(g.padding);
          if (iy < 0 || iy >= static_cast<Index>(g.in_h) || ix < 0 ||
              ix >= static_cast<Index>(g.in_w)) {
            continue;
          }
          for (std::size_t c = 0; c < g.channels; ++c) {
            image[(iy * g.in_w + ix) * g.channels + c] +=
                col[(oy * g.out_w + ox) * cols + (ky * g.kernel + kx) * g.channels + c];
          }
        }
      }
    }
  }
}

template <typename Real>
void affine(const Real* x, std::size_t n, Real scale, Real shift, Real* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * scale + shift;
}

}  // namespace serial

#define FLAMEGAN_INSTANTIATE(NS, R)                                                       \
  template void NS::gemm_nn<R>(std::size_t, std::size_t, std::size_t, const R*, const R*, \
                               R*, bool);                                                 \
  template void NS::gemm_tn<R>(std::size_t, std::size_t, std::size_t, const R*, const R*, \
                               R*, bool);                                                 \
  template void NS::gemm_nt<R>(std::size_t, std::size_t, std::size_t, const R*, const R*, \
                               R*, bool);                                                 \
  template void NS::im2col<R>(const R*, const ConvGeometry&, R*);                         \
  template void NS::col2im<R>(const R*, const ConvGeometry&, R*);                         \
  template void NS::affine<R>(const R*, std::size_t, R, R, R*);

FLAMEGAN_INSTANTIATE(kernels, float)
FLAMEGAN_INSTANTIATE(kernels, double)
FLAMEGAN_INSTANTIATE(serial, float)
FLAMEGAN_INSTANTIATE(serial, double)

#undef FLAMEGAN_INSTANTIATE

}  // namespace flamegan::nn::kernels
