#include <benchmark/benchmark.h>

#include <cmath>

#include "glmphase/channels.hpp"
#include "glmphase/gamp.hpp"
#include "glmphase/numerics.hpp"
#include "glmphase/priors.hpp"
#include "glmphase/replica.hpp"
#include "glmphase/state_evolution.hpp"

using namespace glmphase;

namespace {

void BM_ExpectNormal(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(expect_normal([](double v) { return std::cosh(0.3 * v); }));
}
BENCHMARK(BM_ExpectNormal);

void BM_Denoise(benchmark::State& state) {
  const Prior p = Prior::gauss_bernoulli(0.2);
  double R = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(denoise(p, R, 2.0));
    R = R > 3.0 ? -3.0 : R + 0.01;
  }
}
BENCHMARK(BM_Denoise);

void BM_PsiP0(benchmark::State& state) {
  const Prior p = Prior::rademacher();
  for (auto _ : state) benchmark::DoNotOptimize(psi_p0(p, 1.5));
}
BENCHMARK(BM_PsiP0);

void BM_Gout(benchmark::State& state) {
  const Channel c = state.range(0) == 0 ? Channel::sign() : Channel::abs(0.01);
  double omega = -2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gout(c, 1.0, omega, 0.3));
    omega = omega > 2.0 ? -2.0 : omega + 0.01;
  }
}
BENCHMARK(BM_Gout)->Arg(0)->Arg(1);

void BM_PsiPoutPrime(benchmark::State& state) {
  const Channel c = state.range(0) == 0 ? Channel::sign() : Channel::relu(0.05);
  for (auto _ : state) benchmark::DoNotOptimize(psi_pout_prime(c, 0.5, 1.0));
}
BENCHMARK(BM_PsiPoutPrime)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_StateEvolution(benchmark::State& state) {
  const SEModel model(Prior::rademacher(), Channel::sign());
  for (auto _ : state) benchmark::DoNotOptimize(se_run(model, 1.6, InitKind::Uninformative));
}
BENCHMARK(BM_StateEvolution)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& state) {
  const SEModel model(Prior::gauss_bernoulli(0.5), Channel::linear(0.01));
  for (auto _ : state) benchmark::DoNotOptimize(solve(model, 0.6));
}
BENCHMARK(BM_Solve)->Unit(benchmark::kMillisecond);

void BM_GampRun(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Instance inst = generate_instance(Prior::rademacher(), Channel::sign(), n, 2.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gamp_run(inst));
  state.SetComplexityN(n);
}
BENCHMARK(BM_GampRun)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
