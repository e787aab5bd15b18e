#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gaugefix/experiments.hpp"
#include "gaugefix/instances.hpp"

using namespace gaugefix;

namespace {

TrainConfig short_config(std::size_t steps = 200) {
  TrainConfig cfg;
  cfg.steps = steps;
  return cfg;
}

DatasetConfig small_data() {
  DatasetConfig d;
  d.n_train = 64;
  d.n_val = 128;
  return d;
}

}  // namespace

TEST_CASE("target function by substitution") {
  CHECK(target_function(0.0) == doctest::Approx(0.2).epsilon(1e-15));
  const double x = std::numbers::pi / 5;
  const double expected = 1.0 + 0.2 * std::cos(6.0 * std::numbers::pi / 5) + 0.1 * std::numbers::pi / 5;
  CHECK(target_function(x) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("noiseless training targets follow the target function") {
  DatasetConfig cfg;
  cfg.noise_std = 0.0;
  const DatasetPair d = make_dataset(cfg);
  REQUIRE(d.train.size() == 256);
  for (std::size_t n = 0; n < d.train.size(); ++n) {
    CHECK(d.train.x[n][0] >= -2.0);
    CHECK(d.train.x[n][0] < 2.0);
    CHECK(d.train.y[n][0] == target_function(d.train.x[n][0]));
  }
  CHECK(d.train.split == Split::Train);
  CHECK(d.val.split == Split::Validation);
}

TEST_CASE("validation grid is uniform, noiseless, and seed independent") {
  DatasetConfig a;
  a.seed = 1;
  DatasetConfig b = a;
  b.seed = 999;
  b.noise_std = 2.0;
  const DatasetPair da = make_dataset(a), db = make_dataset(b);
  REQUIRE(da.val.size() == 512);
  CHECK(da.val.x.front()[0] == -3.0);
  CHECK(da.val.x.back()[0] == 3.0);
  CHECK(da.val.x == db.val.x);
  CHECK(da.val.y == db.val.y);
  for (std::size_t n = 0; n < da.val.size(); ++n) {
    CHECK(da.val.y[n][0] == target_function(da.val.x[n][0]));
  }
  const double step = da.val.x[1][0] - da.val.x[0][0];
  CHECK(step == doctest::Approx(6.0 / 511).epsilon(1e-12));
}

TEST_CASE("training noise has the configured spread and is reproducible") {
  DatasetConfig cfg;
  cfg.n_train = 20000;
  cfg.seed = 3;
  const DatasetPair d = make_dataset(cfg);
  double s = 0.0, s2 = 0.0;
  for (std::size_t n = 0; n < d.train.size(); ++n) {
    const double r = d.train.y[n][0] - target_function(d.train.x[n][0]);
    s += r;
    s2 += r * r;
  }
  const double m = s / d.train.size();
  CHECK(std::abs(m) < 4 * 0.3 / std::sqrt(20000.0));
  CHECK(std::sqrt(s2 / d.train.size() - m * m) == doctest::Approx(0.3).epsilon(0.05));

  const DatasetPair again = make_dataset(cfg);
  CHECK(again.train.x == d.train.x);
  CHECK(again.train.y == d.train.y);
}

TEST_CASE("dataset config validation") {
  DatasetConfig cfg;
  cfg.train_lo = 2.0;
  CHECK_THROWS_AS(make_dataset(cfg), std::invalid_argument);
  cfg = DatasetConfig{};
  cfg.n_val = 0;
  CHECK_THROWS_AS(make_dataset(cfg), std::invalid_argument);
  cfg = DatasetConfig{};
  cfg.noise_std = -0.1;
  CHECK_THROWS_AS(make_dataset(cfg), std::invalid_argument);
}

TEST_CASE("summary statistics") {
  const std::vector<double> xs{1.0, 2.0, 4.0, 9.0};
  CHECK(mean(xs) == 4.0);
  CHECK(sample_std(xs) == doctest::Approx(std::sqrt((9.0 + 4.0 + 0.0 + 25.0) / 3.0)));
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("parallel_map preserves order and matches serial execution") {
  const std::vector<std::uint64_t> seeds = seed_list(7, 4);
  const DatasetConfig dcfg = small_data();
  auto fn = [&](std::size_t k) {
    return summarize(seeds[k], short_config(50), train_seeded(seeds[k], short_config(50), dcfg, 8));
  };
  const auto serial = parallel_map<RunSummary>(4, 1, fn);
  const auto threaded = parallel_map<RunSummary>(4, 3, fn);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(serial[k].seed == seeds[k]);
    CHECK(threaded[k].seed == seeds[k]);
    CHECK(serial[k].val_mse == threaded[k].val_mse);
  }
}

TEST_CASE("lambda sweep shape, pairing, and aggregation") {
  const std::vector<double> lambdas{0.0, 0.05, 0.1, 0.2, 0.5};
  const std::vector<std::uint64_t> seeds = seed_list(0, 3);
  const DatasetConfig dcfg = small_data();
  const SweepResult r = lambda_sweep(lambdas, seeds, short_config(), dcfg, {8, 2});
  REQUIRE(r.rows.size() == 5);
  REQUIRE(r.runs.size() == 15);

  // lambda = 0 row equals independent plain-GD runs bitwise.
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const TrainTrace t = train_seeded(seeds[s], short_config(), dcfg, 8);
    CHECK(r.runs[s].val_mse == t.last_finite().val_mse);
    CHECK(r.runs[s].train_mse == t.last_finite().train_mse);
  }

  // Row statistics recomputed from the per-seed runs.
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    std::vector<double> tr, va;
    std::size_t stable = 0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const RunSummary& run = r.runs[l * seeds.size() + s];
      CHECK(run.lambda == lambdas[l]);
      tr.push_back(run.train_mse);
      va.push_back(run.val_mse);
      stable += run.label.kind == Stability::Stable ? 1 : 0;
    }
    const SweepRow& row = r.rows[l];
    CHECK(row.lambda == lambdas[l]);
    CHECK(std::abs(row.train_mse_mean - mean(tr)) <= 1e-12);
    CHECK(std::abs(row.val_mse_std - sample_std(va)) <= 1e-12);
    CHECK(row.n_stable == stable);
    CHECK(row.n_stable + row.n_marginal + row.n_unstable == seeds.size());
  }

  CHECK_THROWS_AS(lambda_sweep(lambdas, std::vector<std::uint64_t>{1}, short_config(), dcfg),
                  std::invalid_argument);
}

TEST_CASE("stress test rows and pairing with the sweep") {
  const std::vector<double> lrs{5e-3, 1e-2, 2e-2};
  const std::vector<std::uint64_t> seeds = seed_list(0, 2);
  const DatasetConfig dcfg = small_data();
  const StressResult r = lr_stress(lrs, 0.2, seeds, short_config(), dcfg, {8, 1});
  REQUIRE(r.rows.size() == 6);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(r.rows[k].method == "baseline");
    CHECK(r.rows[k].lambda == 0.0);
    CHECK(r.rows[k + 3].method == "gauge_fixed");
    CHECK(r.rows[k + 3].lambda == 0.2);
    CHECK(r.rows[k].lr == lrs[k]);
  }
  for (const StressRow& row : r.rows) {
    REQUIRE(row.labels.size() == seeds.size());
    CHECK(row.aggregate == *std::max_element(row.labels.begin(), row.labels.end()));
  }

  // Baseline runs at lr = 5e-3 coincide with the lambda = 0 sweep runs.
  const SweepResult s = lambda_sweep(std::vector<double>{0.0}, seeds, short_config(), dcfg, {8, 1});
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    CHECK(r.runs[k].val_mse == s.runs[k].val_mse);
    CHECK(r.runs[k].drift_v == s.runs[k].drift_v);
  }
}

TEST_CASE("quasi-static learning rate is stable for both methods") {
  TrainConfig cfg = short_config(20);
  const StressResult r = lr_stress(std::vector<double>{1e-6}, 0.2, seed_list(0, 2), cfg, small_data(), {8, 1});
  for (const StressRow& row : r.rows) CHECK(row.aggregate == Stability::Stable);
}

TEST_CASE("worst-label aggregation keeps unstable runs") {
  TrainConfig cfg = short_config(100);
  const StressResult r = lr_stress(std::vector<double>{50.0}, 0.2, seed_list(0, 2), cfg, small_data(), {8, 1});
  for (const StressRow& row : r.rows) {
    CHECK(row.aggregate == Stability::Unstable);
    CHECK(std::isfinite(row.val_mse_mean));
  }
}

TEST_CASE("invariance experiment") {
  RngStream rng(5);
  const Params untrained = init_params(1, 20, 1, rng);
  const InvarianceResult r = invariance_experiment(untrained, 200, 512, 11);
  REQUIRE(r.deltas.size() == 200);
  CHECK(r.max <= 1e-12);
  CHECK(r.min == *std::min_element(r.deltas.begin(), r.deltas.end()));
  CHECK(r.max == *std::max_element(r.deltas.begin(), r.deltas.end()));
  CHECK(r.median == median(r.deltas));

  const InvarianceResult c = invariance_experiment(untrained, 10, 64, 11, true);
  REQUIRE(c.deltas.size() == 10);
  CHECK(c.min == 0.0);

  const InvarianceResult again = invariance_experiment(untrained, 200, 512, 11);
  CHECK(again.deltas == r.deltas);

  const TrainTrace t = train_seeded(0, short_config(), small_data(), 20);
  CHECK(invariance_experiment(t.final_params, 200, 512, 12).max <= 1e-12);
}

TEST_CASE("seed bookkeeping") {
  CHECK(seed_list(10, 3) == std::vector<std::uint64_t>{10, 11, 12});
  CHECK(dataset_seed(4) != init_seed(4));
  const SeededRun a = prepare_run(4, small_data(), 8);
  const SeededRun b = prepare_run(4, small_data(), 8);
  CHECK(a.init == b.init);
  CHECK(a.data.train.y == b.data.train.y);
  CHECK(a.init.hidden() == 8);
}
