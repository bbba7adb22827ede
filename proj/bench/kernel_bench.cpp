// Serial reference kernels against their OpenMP counterparts, at the shapes
// a training step uses (batch 32 x context 8 rows, d_model 64).
#include <benchmark/benchmark.h>

#include <vector>

#include "mpcc/agent/kernels.hpp"
#include "mpcc/agent/dqn.hpp"
#include "mpcc/netsim/rng.hpp"

namespace k = mpcc::agent::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  mpcc::netsim::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

const k::KernelSet& pick(const benchmark::State& st) { return st.range(0) ? k::parallel() : k::reference(); }

void BM_Linear(benchmark::State& st) {
  const int n = 256, in = static_cast<int>(st.range(1)), out = static_cast<int>(st.range(1));
  const auto x = random_vec(static_cast<std::size_t>(n * in), 1);
  const auto w = random_vec(static_cast<std::size_t>(in * out), 2);
  const auto b = random_vec(static_cast<std::size_t>(out), 3);
  std::vector<double> y(static_cast<std::size_t>(n * out));
  const auto& ks = pick(st);
  for (auto _ : st) {
    ks.linear_forward(x.data(), w.data(), b.data(), y.data(), n, in, out);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * n * in * out);
}
BENCHMARK(BM_Linear)->ArgNames({"parallel", "width"})->ArgsProduct({{0, 1}, {64, 128}});

void BM_LinearBackward(benchmark::State& st) {
  const int n = 256, in = 64, out = 128;
  const auto x = random_vec(static_cast<std::size_t>(n * in), 1);
  const auto w = random_vec(static_cast<std::size_t>(in * out), 2);
  const auto dy = random_vec(static_cast<std::size_t>(n * out), 3);
  std::vector<double> dx(static_cast<std::size_t>(n * in)), dw(w.size()), db(static_cast<std::size_t>(out));
  const auto& ks = pick(st);
  for (auto _ : st) {
    ks.linear_backward_input(dy.data(), w.data(), dx.data(), n, in, out);
    ks.linear_backward_params(x.data(), dy.data(), dw.data(), db.data(), n, in, out);
    benchmark::DoNotOptimize(dw.data());
  }
}
BENCHMARK(BM_LinearBackward)->ArgName("parallel")->Arg(0)->Arg(1);

void BM_Attention(benchmark::State& st) {
  const int batch = 32, len = 8, d = 64, heads = 4;
  const auto n = static_cast<std::size_t>(batch * len * d);
  const auto q = random_vec(n, 1), kk = random_vec(n, 2), v = random_vec(n, 3), dout = random_vec(n, 4);
  std::vector<std::uint8_t> valid(static_cast<std::size_t>(batch * len), 1);
  std::vector<double> probs(static_cast<std::size_t>(batch * heads * len * len)), out(n), dq(n), dk(n), dv(n);
  const auto& ks = pick(st);
  for (auto _ : st) {
    ks.attention_forward(q.data(), kk.data(), v.data(), valid.data(), probs.data(), out.data(), batch, len, d, heads);
    ks.attention_backward(dout.data(), q.data(), kk.data(), v.data(), probs.data(), dq.data(), dk.data(), dv.data(),
                          batch, len, d, heads);
    benchmark::DoNotOptimize(dv.data());
  }
}
BENCHMARK(BM_Attention)->ArgName("parallel")->Arg(0)->Arg(1);

void BM_TrainStep(benchmark::State& st) {
  mpcc::agent::AgentConfig cfg;
  cfg.reference_kernels = st.range(0) == 0;
  cfg.warmup = 1;
  cfg.train_every = 1 << 30;  // fill the replay without training
  mpcc::agent::DqnAgent agent(cfg, 12, 25);
  mpcc::netsim::Rng rng(7);
  std::vector<double> obs(12);
  for (auto& x : obs) x = rng.uniform();
  agent.begin_episode(obs);
  for (int t = 0; t < 400; ++t) {
    for (auto& x : obs) x = rng.uniform();
    agent.observe(static_cast<int>(rng.below(25)), rng.uniform(-1.0, 1.0), obs, false);
  }
  for (auto _ : st) benchmark::DoNotOptimize(agent.train_step());
}
BENCHMARK(BM_TrainStep)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
