#include <benchmark/benchmark.h>

#include <random>

#include "steinwave/bayes.hpp"
#include "steinwave/stencil.hpp"
#include "steinwave/vi.hpp"
#include "steinwave/wave.hpp"

using namespace steinwave;

namespace {

wave::SourceSignal pulse() { return wave::SourceSignal::gaussian_pulse(1.0, 0.008, 0.002); }

bayes::HighContrastProblem two_layer_problem(std::size_t nodes) {
  bayes::HighContrastProblem p;
  p.lengths = {1.0, 1.0};
  p.nodes = {nodes, nodes};
  p.source = pulse();
  p.config.dt = 0.4 / (static_cast<double>(nodes - 1) * std::sqrt(3400.0));
  p.config.t_end = 0.1;
  p.config.courant_limit = 0.5;
  p.obs_nodes = {0.4, 0.8, 1.3, 1.9};
  return p;
}

void BM_DerivativeApply(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  fd::DerivativeMatrix op(n, 1.0 / static_cast<double>(n - 1), 2);
  Eigen::VectorXd f(n);
  for (std::size_t i = 0; i < n; ++i)
    f[static_cast<Eigen::Index>(i)] = std::sin(6.0 * static_cast<double>(i) / n);
  Eigen::VectorXd out(n);
  for (auto _ : state) {
    op.apply_into(f, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_DerivativeApply)->Arg(256)->Arg(1024)->Arg(4096);

void BM_HighContrastForward(benchmark::State& state) {
  const auto p = two_layer_problem(static_cast<std::size_t>(state.range(0)));
  Eigen::VectorXd theta(2);
  theta << 2000.0, 2600.0;
  const auto medium = p.medium_for(theta);
  for (auto _ : state) {
    auto rec = wave::solve_high_contrast(medium, p.source, p.config, p.obs_nodes);
    benchmark::DoNotOptimize(rec.values.data());
  }
}
BENCHMARK(BM_HighContrastForward)->Arg(31)->Arg(61)->Arg(121)->Unit(benchmark::kMillisecond);

void BM_AdjointGradient(benchmark::State& state) {
  const auto p = two_layer_problem(static_cast<std::size_t>(state.range(0)));
  Eigen::VectorXd theta(2);
  theta << 2000.0, 2600.0;
  auto data = wave::solve_high_contrast(p.medium_for(theta), p.source, p.config, p.obs_nodes);
  bayes::GaussianPrior prior{Eigen::VectorXd::Constant(2, 2250.0),
                             500.0 * 500.0 * Eigen::MatrixXd::Identity(2, 2)};
  bayes::BayesModel model(p, data, Eigen::VectorXd::Constant(4, 0.01), prior);
  Eigen::VectorXd at(2);
  at << 2100.0, 2500.0;
  for (auto _ : state) {
    auto g = model.grad_adjoint(at);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_AdjointGradient)->Arg(31)->Arg(61)->Unit(benchmark::kMillisecond);

void BM_SteinDirection(benchmark::State& state) {
  const auto m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(m, 2), g(m, 2);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < 2; ++k) {
      x(i, k) = normal(rng);
      g(i, k) = normal(rng);
    }
  const double h = vi::median_bandwidth(x);
  for (auto _ : state) {
    auto phi = vi::stein_direction(x, g, h);
    benchmark::DoNotOptimize(phi.data());
  }
}
BENCHMARK(BM_SteinDirection)->Arg(50)->Arg(100)->Arg(400);

void BM_MedianBandwidth(benchmark::State& state) {
  const auto m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(m, 4);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < 4; ++k) x(i, k) = normal(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vi::median_bandwidth(x));
  }
}
BENCHMARK(BM_MedianBandwidth)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
