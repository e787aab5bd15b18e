#include "gaugefix/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "gaugefix/rng.hpp"

namespace gaugefix {

double target_function(double x) { return std::sin(2.5 * x) + 0.2 * std::cos(6.0 * x) + 0.1 * x; }

void DatasetConfig::check() const {
  if (n_train < 1 || n_val < 1) throw std::invalid_argument("DatasetConfig: sizes must be >= 1");
  if (!(train_lo < train_hi) || !(val_lo < val_hi)) {
    throw std::invalid_argument("DatasetConfig: intervals need lo < hi");
  }
  if (!(noise_std >= 0.0)) throw std::invalid_argument("DatasetConfig: noise_std must be >= 0");
}

DatasetPair make_dataset(const DatasetConfig& cfg) {
  cfg.check();
  RngStream rng(cfg.seed);
  DatasetPair out;
  out.train.split = Split::Train;
  out.val.split = Split::Validation;

  out.train.x.reserve(cfg.n_train);
  for (std::size_t n = 0; n < cfg.n_train; ++n) {
    out.train.x.push_back({rng.uniform(cfg.train_lo, cfg.train_hi)});
  }
  const Vector noise = gaussian(rng, cfg.n_train, cfg.noise_std);
  for (std::size_t n = 0; n < cfg.n_train; ++n) {
    out.train.y.push_back({target_function(out.train.x[n][0]) + noise[n]});
  }

  for (std::size_t n = 0; n < cfg.n_val; ++n) {
    const double x = cfg.n_val == 1
                         ? 0.5 * (cfg.val_lo + cfg.val_hi)
                         : cfg.val_lo + (cfg.val_hi - cfg.val_lo) * static_cast<double>(n) /
                                            static_cast<double>(cfg.n_val - 1);
    out.val.x.push_back({x});
    out.val.y.push_back({target_function(x)});
  }
  return out;
}

std::uint64_t dataset_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 0); }
std::uint64_t init_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 1); }

SeededRun prepare_run(std::uint64_t run_seed, const DatasetConfig& dcfg, std::size_t width) {
  DatasetConfig d = dcfg;
  d.seed = dataset_seed(run_seed);
  RngStream init_rng(init_seed(run_seed));
  return {make_dataset(d), init_params(1, width, 1, init_rng)};
}

TrainTrace train_seeded(std::uint64_t run_seed, TrainConfig cfg, const DatasetConfig& dcfg,
                        std::size_t width) {
  cfg.seed = run_seed;
  const SeededRun run = prepare_run(run_seed, dcfg, width);
  return train(run.init, run.data.train, run.data.val, cfg);
}

RunSummary summarize(std::uint64_t seed, const TrainConfig& cfg, const TrainTrace& trace) {
  const TraceRecord& last = trace.last_finite();
  const ScaleDrift drift = scale_drift(trace);
  RunSummary s;
  s.seed = seed;
  s.lambda = cfg.lambda;
  s.lr = cfg.lr;
  s.train_mse = last.train_mse;
  s.val_mse = last.val_mse;
  s.drift_v = drift.drift_v;
  s.drift_u = drift.drift_u;
  s.label = trace.label;
  s.records = trace.records.size();
  return s;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median: empty input");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

template <typename T>
std::vector<T> parallel_map(std::size_t n, std::size_t jobs,
                            const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            out[i] = fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

template std::vector<RunSummary> parallel_map<RunSummary>(
    std::size_t, std::size_t, const std::function<RunSummary(std::size_t)>&);

SweepResult lambda_sweep(std::span<const double> lambdas, std::span<const std::uint64_t> seeds,
                         const TrainConfig& base, const DatasetConfig& dcfg,
                         const ExperimentOptions& opt) {
  if (seeds.size() < 2) throw std::invalid_argument("lambda_sweep: needs at least 2 seeds");
  const std::size_t ns = seeds.size();
  SweepResult out;
  out.runs = parallel_map<RunSummary>(lambdas.size() * ns, opt.jobs, [&](std::size_t k) {
    TrainConfig cfg = base;
    cfg.lambda = lambdas[k / ns];
    cfg.seed = seeds[k % ns];
    return summarize(cfg.seed, cfg, train_seeded(cfg.seed, cfg, dcfg, opt.width));
  });

  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    std::vector<double> tr, va, dv;
    SweepRow row;
    row.lambda = lambdas[l];
    for (std::size_t s = 0; s < ns; ++s) {
      const RunSummary& r = out.runs[l * ns + s];
      tr.push_back(r.train_mse);
      va.push_back(r.val_mse);
      dv.push_back(r.drift_v);
      switch (r.label.kind) {
        case Stability::Stable:
          ++row.n_stable;
          break;
        case Stability::Marginal:
          ++row.n_marginal;
          break;
        case Stability::Unstable:
          ++row.n_unstable;
          break;
      }
    }
    row.train_mse_mean = mean(tr);
    row.train_mse_std = sample_std(tr);
    row.val_mse_mean = mean(va);
    row.val_mse_std = sample_std(va);
    row.drift_v_mean = mean(dv);
    out.rows.push_back(row);
  }
  return out;
}

StressResult lr_stress(std::span<const double> lrs, double lambda_fixed,
                       std::span<const std::uint64_t> seeds, const TrainConfig& base,
                       const DatasetConfig& dcfg, const ExperimentOptions& opt) {
  if (seeds.empty()) throw std::invalid_argument("lr_stress: needs at least 1 seed");
  StressResult out;
  for (const bool gauge_fixed : {false, true}) {
    for (const double lr : lrs) {
      StressRow row;
      row.method = gauge_fixed ? "gauge_fixed" : "baseline";
      row.lr = lr;
      row.lambda = gauge_fixed ? lambda_fixed : 0.0;
      out.rows.push_back(row);
    }
  }

  const std::size_t ns = seeds.size();
  out.runs = parallel_map<RunSummary>(out.rows.size() * ns, opt.jobs, [&](std::size_t k) {
    const StressRow& row = out.rows[k / ns];
    TrainConfig cfg = base;
    cfg.lr = row.lr;
    cfg.lambda = row.lambda;
    cfg.seed = seeds[k % ns];
    return summarize(cfg.seed, cfg, train_seeded(cfg.seed, cfg, dcfg, opt.width));
  });

  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    StressRow& row = out.rows[r];
    std::vector<double> va;
    for (std::size_t s = 0; s < ns; ++s) {
      const RunSummary& run = out.runs[r * ns + s];
      va.push_back(run.val_mse);
      row.labels.push_back(run.label.kind);
      row.aggregate = std::max(row.aggregate, run.label.kind);
    }
    row.val_mse_mean = mean(va);
  }
  return out;
}

InvarianceResult invariance_experiment(const Params& p, std::size_t n_transforms,
                                       std::size_t n_inputs, std::uint64_t seed,
                                       bool identity_control) {
  if (n_transforms < 1) throw std::invalid_argument("invariance_experiment: n_transforms < 1");
  if (n_inputs < 1) throw std::invalid_argument("invariance_experiment: n_inputs < 1");
  RngStream input_rng(derive_seed(seed, 0));
  RngStream scale_rng(derive_seed(seed, 1));
  std::vector<Vector> inputs(n_inputs, Vector(p.input_dim()));
  for (auto& x : inputs) {
    for (double& xj : x) xj = input_rng.uniform(-3.0, 3.0);
  }

  InvarianceResult out;
  out.deltas.reserve(n_transforms);
  for (std::size_t t = 0; t < n_transforms; ++t) {
    const GaugeScales s = (identity_control && t == 0)
                              ? GaugeScales::identity(p.hidden())
                              : random_log_uniform_scales(p.hidden(), scale_rng);
    out.deltas.push_back(invariance_error(p, s, inputs));
  }
  out.min = *std::min_element(out.deltas.begin(), out.deltas.end());
  out.max = *std::max_element(out.deltas.begin(), out.deltas.end());
  out.median = median(out.deltas);
  return out;
}

std::vector<std::uint64_t> seed_list(std::uint64_t master_seed, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t k = 0; k < count; ++k) seeds[k] = master_seed + k;
  return seeds;
}

}  // namespace gaugefix
