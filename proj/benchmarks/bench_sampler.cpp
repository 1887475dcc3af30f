#include <benchmark/benchmark.h>

#include "palign/estimation.hpp"
#include "palign/geometry.hpp"
#include "palign/sampler.hpp"
#include "palign/synthetic.hpp"

namespace {

using namespace palign;

struct BenchInstance {
  Configuration x;
  Configuration y;
  Hyperparams hyper;
};

// Gel-scale planar instance: 35 points per side under a fixed transform.
BenchInstance gel_instance() {
  BenchInstance inst;
  Rng rng(71);
  std::uniform_real_distribution<double> unif(0.0, 60.0);
  std::normal_distribution<double> noise(0.0, 1.5);
  Mat a(2, 2);
  a << 0.9731, 0.0394, -0.0231, 0.9040;
  const Mat a_inv = a.inverse();
  const Vec tau = (Vec(2) << -30.0, 60.0).finished();
  for (int i = 0; i < 35; ++i) {
    Vec mu(2);
    mu << unif(rng), unif(rng);
    inst.x.points.push_back((mu + (Vec(2) << noise(rng), noise(rng)).finished()).eval());
    inst.y.points.push_back(
        (a_inv * (mu + (Vec(2) << noise(rng), noise(rng)).finished() - tau)).eval());
  }
  inst.hyper.kappa_match = 10000.0;
  inst.hyper.alpha = 1.0;
  inst.hyper.beta = 16.0;
  inst.hyper.sigma_tau = 20.0;
  inst.hyper.mu_tau = Vec::Zero(2);
  return inst;
}

BenchInstance protein_instance() {
  GenerativeSpec spec;
  spec.lambda_rate = 100.0 / 125000.0;
  spec.box_lo = Vec::Zero(3);
  spec.box_hi = (Vec(3) << 50.0, 50.0, 50.0).finished();
  spec.p_x = 0.05;
  spec.p_y = 0.25;
  spec.rho = 28.0;
  Rng rng(3307);
  spec.pose.A = rotation_matrix_3d(sample_uniform_rotation_3d(rng));
  spec.pose.tau = (Vec(3) << 5.0, -10.0, 20.0).finished();
  spec.pose.sigma = 1.0;
  const GeneratedInstance gen = generate(spec, rng);

  BenchInstance inst;
  inst.x = gen.x;
  inst.y = gen.y;
  inst.hyper.alpha = 1.0;
  inst.hyper.beta = 36.0;
  inst.hyper.sigma_tau = 50.0;
  inst.hyper.mu_tau = Vec::Zero(3);
  const double ratio = elicit_d_ratio(static_cast<int>(gen.x.size()),
                                      static_cast<int>(gen.y.size()), 35.0);
  inst.hyper.prior_count_ratio = ratio;
  inst.hyper.kappa_match = ratio * 125000.0;
  return inst;
}

void BM_GelSweep(benchmark::State& state) {
  const BenchInstance inst = gel_instance();
  Mat a(2, 2);
  a << 0.9731, 0.0394, -0.0231, 0.9040;
  Rng rng(1);
  ChainState s = make_initial_state(inst.x, inst.y, inst.hyper, false,
                                    std::optional<Mat>(a), rng);
  SweepSchedule schedule;
  schedule.m_updates_per_sweep = 5;
  for (auto _ : state) {
    sweep(s, inst.x, inst.y, inst.hyper, schedule, rng);
    benchmark::DoNotOptimize(s.log_joint);
  }
}
BENCHMARK(BM_GelSweep);

void BM_ProteinSweep3d(benchmark::State& state) {
  const BenchInstance inst = protein_instance();
  Rng rng(2);
  ChainState s = make_initial_state(inst.x, inst.y, inst.hyper, true, std::nullopt, rng);
  SweepSchedule schedule;
  schedule.m_updates_per_sweep = 10;
  schedule.sample_rotation = true;
  for (auto _ : state) {
    sweep(s, inst.x, inst.y, inst.hyper, schedule, rng);
    benchmark::DoNotOptimize(s.log_joint);
  }
}
BENCHMARK(BM_ProteinSweep3d);

void BM_VonMisesDraw(benchmark::State& state) {
  Rng rng(3);
  const VonMisesParams params{0.7, static_cast<double>(state.range(0))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_von_mises(params, rng));
  }
}
BENCHMARK(BM_VonMisesDraw)->Arg(1)->Arg(50)->Arg(5000);

void BM_OptimalMatching(benchmark::State& state) {
  Rng rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MatchProbabilityTable table;
  table.p = Eigen::MatrixXd(43, 58);
  for (int j = 0; j < 43; ++j) {
    for (int k = 0; k < 58; ++k) table.p(j, k) = unif(rng);
  }
  table.sample_count = 1;
  const LossSpec loss = LossSpec::from_cost_ratio(0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_matching(table, loss).match_count());
  }
}
BENCHMARK(BM_OptimalMatching);

}  // namespace

BENCHMARK_MAIN();
