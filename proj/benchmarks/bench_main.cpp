// Microbenchmarks for the hot paths: the recurrent step, the
// certificate check, the pH root solve and scenario input generation.

#include <random>

#include <benchmark/benchmark.h>

#include "isslstm/lstm.hpp"
#include "isslstm/plant.hpp"
#include "isslstm/signals.hpp"
#include "isslstm/stability.hpp"

using namespace isslstm;

namespace {

LstmParams sized_net(int n_x) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-0.3, 0.3);
  LstmParams p = LstmParams::zeros(n_x, 1, 1);
  for (MatrixXd* m : {&p.Wf, &p.Wi, &p.Wc, &p.Wo, &p.Uf, &p.Ui, &p.Uc, &p.Uo,
                      &p.C})
    for (Eigen::Index i = 0; i < m->size(); ++i) *(m->data() + i) = unif(rng);
  return p;
}

void BM_LstmStep(benchmark::State& state) {
  const LstmParams p = sized_net(static_cast<int>(state.range(0)));
  LstmState s = LstmState::zero(p.n_x());
  const VectorXd u = VectorXd::Constant(1, 0.3);
  for (auto _ : state) {
    s = step(p, s, u);
    benchmark::DoNotOptimize(s.x.data());
  }
}
BENCHMARK(BM_LstmStep)->Arg(5)->Arg(20)->Arg(50);

void BM_IssCheck(benchmark::State& state) {
  const LstmParams p = sized_net(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto cert = iss_check(p);
    benchmark::DoNotOptimize(cert.delta);
  }
}
BENCHMARK(BM_IssCheck)->Arg(5)->Arg(50);

void BM_PhOutput(benchmark::State& state) {
  for (auto _ : state) {
    double pH = ph_output(1.2e-3, 4.0e-4, 6.35, 10.25);
    benchmark::DoNotOptimize(pH);
  }
}
BENCHMARK(BM_PhOutput);

void BM_PlantStep(benchmark::State& state) {
  const PhPlantConfig cfg;
  PhPlantState s = plant_equilibrium(cfg, 0.0);
  for (auto _ : state) {
    auto [next, pH] = plant_step(cfg, s, 0.2);
    benchmark::DoNotOptimize(pH);
  }
}
BENCHMARK(BM_PlantStep);

void BM_GenMprs(benchmark::State& state) {
  MprsClass cls;
  cls.tau = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto seq = gen_mprs(cls, 3);
    benchmark::DoNotOptimize(seq.data());
  }
}
BENCHMARK(BM_GenMprs)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
