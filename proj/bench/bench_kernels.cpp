// OpenMP kernels against their serial references. The parallel versions also
// use cache-friendly loop orders (row-wise GEMM with simd, whole-row copies
// for the cube), so they win even on one thread; the serial ones are the
// plain index-by-index definitions the tests check against.
#include <benchmark/benchmark.h>

#include <vector>

#include "flamegan/gan.hpp"
#include "flamegan/nn/kernels.hpp"
#include "flamegan/nn/rng.hpp"
#include "flamegan/slicing.hpp"

namespace {

using namespace flamegan;
namespace k = nn::kernels;

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = float(rng.uniform(-1, 1));
  return v;
}

Block random_block(std::size_t t, std::size_t s) {
  nn::Rng rng(1);
  Block b;
  for (std::size_t i = 0; i < t; ++i) {
    Frame f(s, s);
    for (auto& p : f.pixels) p = std::uint8_t(rng.below(256));
    b.frames.push_back(std::move(f));
  }
  return b;
}

// First discriminator conv of the toy network as a GEMM: 128 positions,
// 5*5*96 patch, 16 filters. Second conv of the full-scale network: 512 positions,
// 5*5*64 patch, 128 filters.
template <bool Parallel>
void BM_gemm(benchmark::State& state) {
  const std::size_t m = state.range(0), kk = state.range(1), n = state.range(2);
  const auto a = random_floats(m * kk, 2), b = random_floats(kk * n, 3);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::gemm_nn(m, n, kk, a.data(), b.data(), c.data(), false);
    else
      k::serial::gemm_nn(m, n, kk, a.data(), b.data(), c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(2 * m * n * kk));
}
BENCHMARK(BM_gemm<true>)->Name("gemm_nn/omp")->Args({128, 2400, 16})->Args({512, 1600, 128});
BENCHMARK(BM_gemm<false>)->Name("gemm_nn/serial")->Args({128, 2400, 16})->Args({512, 1600, 128});

template <bool Parallel>
void BM_im2col(benchmark::State& state) {
  // toy discriminator input: 16 x 32 x 96, k5 s2 p2
  const auto g = k::make_geometry(16, 32, 96, 5, 2, 2);
  const auto image = random_floats(16 * 32 * 96, 4);
  std::vector<float> col(g.positions() * g.patch_size()), back(image.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::im2col(image.data(), g, col.data());
      k::col2im(col.data(), g, back.data());
    } else {
      k::serial::im2col(image.data(), g, col.data());
      k::serial::col2im(col.data(), g, back.data());
    }
    benchmark::DoNotOptimize(back.data());
  }
}
BENCHMARK(BM_im2col<true>)->Name("im2col+col2im/omp");
BENCHMARK(BM_im2col<false>)->Name("im2col+col2im/serial");

template <bool Parallel>
void BM_build_cube(benchmark::State& state) {
  const Block b = random_block(kFullBlockFrames, kFullFrameSize);
  for (auto _ : state) {
    SliceCube c = Parallel ? build_cube(b) : reference::build_cube(b);
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_build_cube<true>)->Name("build_cube_64x128/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_build_cube<false>)->Name("build_cube_64x128/serial")->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_normalize(benchmark::State& state) {
  const SliceCube c = build_cube(random_block(kFullBlockFrames, kFullFrameSize));
  std::vector<float> out(c.element_count());
  for (auto _ : state) {
    if constexpr (Parallel)
      normalize_into(c.raw(), out);
    else
      reference::normalize_into(c.raw(), out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_normalize<true>)->Name("normalize_64x128/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_normalize<false>)->Name("normalize_64x128/serial")->Unit(benchmark::kMillisecond);

void BM_toy_discriminator(benchmark::State& state) {
  nn::Rng rng(5);
  const Discriminator d(NetSpec::toy(), rng);
  const std::size_t n = state.range(0);
  Discriminator::Tensor x({n, 16, 32, 96});
  for (auto& v : x.values()) v = float(rng.uniform(-1, 1));
  for (auto _ : state) benchmark::DoNotOptimize(d.probabilities(x));
  state.SetItemsProcessed(state.iterations() * int64_t(n));
}
BENCHMARK(BM_toy_discriminator)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
