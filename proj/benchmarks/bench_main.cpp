#include <benchmark/benchmark.h>

#include "lgcn/evaluation.hpp"
#include "lgcn/synthetic.hpp"
#include "lgcn/training.hpp"

namespace {

lgcn::InteractionDataset bench_dataset(std::size_t users) {
  lgcn::BlockDatasetConfig cfg;
  cfg.users = users;
  cfg.items = users * 3 / 2;
  cfg.clusters = 10;
  auto block = lgcn::make_block_dataset(cfg);
  return lgcn::build_dataset(block.train, block.test, 0.0, 1).dataset;
}

void BM_Spmm(benchmark::State& state) {
  const auto ds = bench_dataset(static_cast<std::size_t>(state.range(0)));
  const auto a = lgcn::normalize(lgcn::build_adjacency(ds), lgcn::NormScheme::SymSqrt);
  const auto x = lgcn::init_embeddings(ds.num_users, ds.num_items, 64, 1).e0();
  lgcn::DenseMatrix out(x.rows(), x.cols());
  for (auto _ : state) {
    lgcn::spmm_into(a, x, out);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(a.nnz() * 64));
}
BENCHMARK(BM_Spmm)->Arg(1000)->Arg(4000);

void BM_Forward(benchmark::State& state) {
  const auto ds = bench_dataset(2000);
  const auto a = lgcn::normalize(lgcn::build_adjacency(ds), lgcn::NormScheme::SymSqrt);
  auto s = lgcn::init_embeddings(ds.num_users, ds.num_items, 64, 1);
  const auto w = lgcn::LayerWeights::uniform(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    lgcn::forward(s, a, w);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Forward)->DenseRange(0, 4);

void BM_TrainStep(benchmark::State& state) {
  const auto ds = bench_dataset(2000);
  const auto prop = lgcn::Propagation::create(
      lgcn::normalize(lgcn::build_adjacency(ds), lgcn::NormScheme::SymSqrt),
      lgcn::LayerWeights::uniform(3));
  auto s = lgcn::init_embeddings(ds.num_users, ds.num_items, 64, 1);
  lgcn::AdamState adam(s.e0().rows(), s.e0().cols());
  lgcn::TripletSampler sampler(ds);
  lgcn::Rng rng(3);
  const lgcn::LossConfig loss;
  for (auto _ : state) {
    const auto batch = sampler.sample(1024, rng);
    lgcn::forward(s, prop.adjacency, prop.weights);
    benchmark::DoNotOptimize(lgcn::bpr_loss(batch, s, prop.adjacency, loss));
    const auto g = lgcn::backward(batch, s, prop.adjacency, prop.adjoint_or_null(), prop.weights,
                                  loss);
    lgcn::adam_step(adam, g, s.mutable_e0(), 1e-3);
  }
}
BENCHMARK(BM_TrainStep);

void BM_Evaluate(benchmark::State& state) {
  const auto ds = bench_dataset(2000);
  auto s = lgcn::init_embeddings(ds.num_users, ds.num_items, 64, 1);
  lgcn::forward(s, lgcn::normalize(lgcn::build_adjacency(ds), lgcn::NormScheme::SymSqrt),
                lgcn::LayerWeights::uniform(3));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lgcn::evaluate_all_ranking(s, ds, 20).recall);
  }
}
BENCHMARK(BM_Evaluate);

}  // namespace

BENCHMARK_MAIN();
