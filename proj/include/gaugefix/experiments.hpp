#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gaugefix/dynamics.hpp"
#include "gaugefix/network.hpp"

namespace gaugefix {

// y(x) = sin(2.5 x) + 0.2 cos(6 x) + 0.1 x, before noise.
double target_function(double x);

struct DatasetConfig {
  std::size_t n_train = 256;
  double train_lo = -2.0;
  double train_hi = 2.0;
  std::size_t n_val = 512;
  double val_lo = -3.0;
  double val_hi = 3.0;
  double noise_std = 0.3;
  std::uint64_t seed = 0;

  void check() const;
};

struct DatasetPair {
  Dataset train;
  Dataset val;
};

// Training inputs are uniform draws with Gaussian label noise; validation is a
// noiseless uniform grid, independent of the seed.
DatasetPair make_dataset(const DatasetConfig& cfg);

struct ExperimentOptions {
  std::size_t width = 20;
  std::size_t jobs = 1;
};

// Everything that varies per seed is derived from the run seed alone, so runs
// with the same seed share their dataset and initial parameters whatever the
// method, lambda or learning rate.
std::uint64_t dataset_seed(std::uint64_t run_seed);
std::uint64_t init_seed(std::uint64_t run_seed);

struct SeededRun {
  DatasetPair data;
  Params init;
};
SeededRun prepare_run(std::uint64_t run_seed, const DatasetConfig& dcfg, std::size_t width);

// Trains one paired run; cfg.seed is overwritten with run_seed.
TrainTrace train_seeded(std::uint64_t run_seed, TrainConfig cfg, const DatasetConfig& dcfg,
                        std::size_t width);

struct RunSummary {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double lr = 0.0;
  // Taken from the last finite iterate when a run is truncated.
  double train_mse = 0.0;
  double val_mse = 0.0;
  double drift_v = 0.0;
  double drift_u = 0.0;
  StabilityLabel label;
  std::size_t records = 0;
};

RunSummary summarize(std::uint64_t seed, const TrainConfig& cfg, const TrainTrace& trace);

struct SweepRow {
  double lambda = 0.0;
  double train_mse_mean = 0.0;
  double train_mse_std = 0.0;
  double val_mse_mean = 0.0;
  double val_mse_std = 0.0;
  double drift_v_mean = 0.0;
  std::size_t n_stable = 0;
  std::size_t n_marginal = 0;
  std::size_t n_unstable = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<RunSummary> runs;  // lambda-major, then seed order
};

struct StressRow {
  std::string method;  // "baseline" or "gauge_fixed"
  double lr = 0.0;
  double lambda = 0.0;
  double val_mse_mean = 0.0;
  std::vector<Stability> labels;  // per seed
  Stability aggregate = Stability::Stable;  // worst per-seed label
};

struct StressResult {
  std::vector<StressRow> rows;
  std::vector<RunSummary> runs;  // row-major, then seed order
};

struct InvarianceResult {
  std::vector<double> deltas;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

double mean(std::span<const double> xs);
// Unbiased (n - 1) sample standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> xs);
double median(std::vector<double> xs);

// Evaluates fn(0..n-1) on up to `jobs` threads; results are stored by index,
// so the output order never depends on scheduling.
template <typename T>
std::vector<T> parallel_map(std::size_t n, std::size_t jobs,
                            const std::function<T(std::size_t)>& fn);

SweepResult lambda_sweep(std::span<const double> lambdas, std::span<const std::uint64_t> seeds,
                         const TrainConfig& base, const DatasetConfig& dcfg,
                         const ExperimentOptions& opt = {});

// Baseline rows (lambda = 0) for every lr, then gauge-fixed rows.
StressResult lr_stress(std::span<const double> lrs, double lambda_fixed,
                       std::span<const std::uint64_t> seeds, const TrainConfig& base,
                       const DatasetConfig& dcfg, const ExperimentOptions& opt = {});

// Scales are s_i = exp(Uniform(-1, 1)); inputs are Uniform(-3, 3)^d. With
// identity_control, transform 0 uses s = 1.
InvarianceResult invariance_experiment(const Params& p, std::size_t n_transforms,
                                       std::size_t n_inputs, std::uint64_t seed,
                                       bool identity_control = false);

std::vector<std::uint64_t> seed_list(std::uint64_t master_seed, std::size_t count);

}  // namespace gaugefix
