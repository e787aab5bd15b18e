#include <doctest.h>

#include <cmath>
#include <limits>

#include "gaugefix/dynamics.hpp"
#include "gaugefix/experiments.hpp"
#include "gaugefix/instances.hpp"
#include "oracles.hpp"

using namespace gaugefix;

namespace {

struct Instance {
  Params p;
  Dataset train;
  Dataset val;
};

Instance random_instance(std::uint64_t seed, std::size_t d = 2, std::size_t h = 5,
                         double lo = 0.3, double hi = 3.0) {
  RngStream rng(seed);
  Instance in;
  in.p = random_network(d, h, 1, rng, lo, hi);
  in.train = random_dataset(d, 1, 16, rng);
  in.val = random_dataset(d, 1, 16, rng);
  in.val.split = Split::Validation;
  return in;
}

TrainTrace synthetic_trace(const std::vector<double>& losses) {
  TrainTrace t;
  for (std::size_t k = 0; k < losses.size(); ++k) {
    TraceRecord r;
    r.step = k;
    r.train_mse = losses[k];
    t.records.push_back(r);
  }
  return t;
}

double flat_distance(const Params& a, const Params& b) {
  const std::vector<double> x = flatten(a), y = flatten(b);
  double m = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) m = std::max(m, std::abs(x[k] - y[k]));
  return m;
}

}  // namespace

TEST_CASE("total loss recomposes from its parts") {
  const Instance in = random_instance(1);
  CHECK(total_loss(in.p, in.train, 0.0, 1e-8) == mse_loss(in.p, in.train));

  // Scalar input and output: each |w_i| equals |a_i| exactly, so G is exactly 0.
  Params bal = Params::zeros(1, 4, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    bal.w1(i, 0) = 0.3 + 0.2 * i;
    bal.w2(0, i) = i % 2 ? bal.w1(i, 0) : -bal.w1(i, 0);
    bal.b1[i] = 0.1 * i - 0.15;
  }
  Dataset scalar;
  RngStream rng(99);
  for (int n = 0; n < 10; ++n) {
    scalar.x.push_back({rng.uniform(-1, 1)});
    scalar.y.push_back({rng.normal()});
  }
  CHECK(gauge_functional(bal, 1e-8) == 0.0);
  CHECK(total_loss(bal, scalar, 0.7, 1e-8) == mse_loss(bal, scalar));

  const double expected = oracle::mse(in.p, in.train) + 0.3 * oracle::gauge(in.p, 1e-8);
  CHECK(oracle::relative_error(total_loss(in.p, in.train, 0.3, 1e-8), expected, 0.0) <= 1e-15);
}

TEST_CASE("gd_step examples") {
  const Instance in = random_instance(2);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.lambda = 0.5;
  CHECK(gd_step(in.p, in.train, cfg) == in.p);

  // lambda = 0 is bitwise plain gradient descent.
  cfg.lr = 0.01;
  cfg.lambda = 0.0;
  const Grads g = task_gradients(in.p, in.train);
  const std::vector<double> theta = flatten(in.p), grad = flatten(g);
  std::vector<double> plain(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) plain[k] = theta[k] - cfg.lr * grad[k];
  CHECK(gd_step(in.p, in.train, cfg) == unflatten(in.p, plain));

  // lambda > 0 applies both terms.
  cfg.lambda = 0.25;
  const Grads gg = gauge_gradients(in.p, cfg.eps).grads;
  const std::vector<double> ggf = flatten(gg);
  const std::vector<double> got = flatten(gd_step(in.p, in.train, cfg));
  for (std::size_t k = 0; k < theta.size(); ++k) {
    CHECK(got[k] == doctest::Approx(theta[k] - cfg.lr * (grad[k] + cfg.lambda * ggf[k])).epsilon(1e-14));
  }
}

TEST_CASE("a small step decreases the total loss") {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const Instance in = random_instance(seed);
    TrainConfig cfg;
    cfg.lr = 1e-4;
    cfg.lambda = 0.2;
    const double before = total_loss(in.p, in.train, cfg.lambda, cfg.eps);
    const double after = total_loss(gd_step(in.p, in.train, cfg), in.train, cfg.lambda, cfg.eps);
    CHECK(after < before);
  }
}

TEST_CASE("non-finite gradients raise a divergence error") {
  Instance in = random_instance(3);
  for (double& w : in.p.w1.data()) w = 1e300;
  for (double& w : in.p.w2.data()) w = 1e300;
  for (double& b : in.p.b1) b = 1e300;
  TrainConfig cfg;
  CHECK_THROWS_AS(gd_step(in.p, in.train, cfg), DivergenceError);
}

TEST_CASE("train bookkeeping") {
  const Instance in = random_instance(4);
  TrainConfig cfg;
  cfg.steps = 0;
  const TrainTrace zero = train(in.p, in.train, in.val, cfg);
  REQUIRE(zero.records.size() == 1);
  CHECK(zero.records[0].train_mse == mse_loss(in.p, in.train));
  CHECK(zero.records[0].val_mse == mse_loss(in.p, in.val));
  CHECK(zero.final_params == in.p);

  cfg.steps = 50;
  cfg.lambda = 0.1;
  const TrainTrace a = train(in.p, in.train, in.val, cfg);
  const TrainTrace b = train(in.p, in.train, in.val, cfg);
  REQUIRE(a.records.size() == 51);
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].step == k);
    CHECK(a.records[k].train_mse == b.records[k].train_mse);
    CHECK(a.records[k].gauge == b.records[k].gauge);
  }
  CHECK(a.final_params == b.final_params);
  CHECK_FALSE(a.truncated_at.has_value());

  // Record k describes the iterate after k steps.
  Params p = in.p;
  for (int k = 0; k < 50; ++k) p = gd_step(p, in.train, cfg);
  CHECK(p == a.final_params);
  CHECK(a.records.back().gauge == gauge_functional(p, cfg.eps));
}

TEST_CASE("strong gauge fixing relaxes the imbalance monotonically") {
  const Instance in = random_instance(5, 2, 4, 0.5, 2.0);
  TrainConfig cfg;
  cfg.lambda = 10.0;
  cfg.lr = 1e-3;
  cfg.steps = 100;
  const TrainTrace t = train(in.p, in.train, in.val, cfg);
  REQUIRE(t.records.size() == 101);
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    CHECK(t.records[k].mean_abs_v < t.records[k - 1].mean_abs_v);
  }
}

TEST_CASE("divergence truncates and keeps the last finite iterate") {
  const Instance in = random_instance(6);
  TrainConfig cfg;
  cfg.lr = 50.0;
  cfg.steps = 500;
  const TrainTrace t = train(in.p, in.train, in.val, cfg);
  REQUIRE(t.truncated_at.has_value());
  CHECK(t.records.size() == *t.truncated_at + 1);
  CHECK(t.label.kind == Stability::Unstable);
  CHECK(all_finite(t.final_params));
  CHECK(t.last_finite().finite());
}

TEST_CASE("stability classification on synthetic traces") {
  std::vector<double> decreasing;
  for (int k = 0; k < 200; ++k) decreasing.push_back(1.0 / (1.0 + k));
  CHECK(classify_stability(synthetic_trace(decreasing), 20).kind == Stability::Stable);

  std::vector<double> with_nan = decreasing;
  with_nan[150] = std::numeric_limits<double>::quiet_NaN();
  CHECK(classify_stability(synthetic_trace(with_nan), 20).kind == Stability::Unstable);

  std::vector<double> blowup = decreasing;
  blowup.back() = 2e4;
  const StabilityLabel b = classify_stability(synthetic_trace(blowup), 20);
  CHECK(b.kind == Stability::Unstable);
  CHECK(b.statistic == doctest::Approx(2e4));

  // +-20% oscillation about a plateau.
  std::vector<double> osc(200);
  for (int k = 0; k < 200; ++k) osc[k] = 0.5 * (1.0 + 0.2 * (k % 2 == 0 ? 1 : -1));
  const StabilityLabel m = classify_stability(synthetic_trace(osc), 20);
  CHECK(m.kind == Stability::Marginal);
  CHECK(m.statistic == doctest::Approx(0.6 / 0.4 - 1.0));

  // +-2% stays under the 10% amplitude.
  for (int k = 0; k < 200; ++k) osc[k] = 0.5 * (1.0 + 0.02 * (k % 2 == 0 ? 1 : -1));
  CHECK(classify_stability(synthetic_trace(osc), 20).kind == Stability::Stable);

  CHECK_THROWS(classify_stability(TrainTrace{}, 10));
}

TEST_CASE("scale drift") {
  std::vector<double> flat(10, 0.3);
  TrainTrace c = synthetic_trace(flat);
  for (TraceRecord& r : c.records) {
    r.mean_abs_v = 0.4;
    r.mean_u = -1.0;
  }
  const ScaleDrift none = scale_drift(c);
  CHECK(none.drift_v == 0.0);
  CHECK(none.drift_u == 0.0);

  // Pure relaxation: no growth, and the relaxation equals first minus last.
  const Instance in = random_instance(7, 2, 4, 0.5, 2.0);
  TrainConfig cfg;
  cfg.lambda = 10.0;
  cfg.lr = 1e-3;
  cfg.steps = 100;
  const TrainTrace t = train(in.p, in.train, in.val, cfg);
  const ScaleDrift d = scale_drift(t);
  CHECK(d.drift_v == 0.0);
  CHECK(d.relax_v == t.records.front().mean_abs_v - t.records.back().mean_abs_v);
  CHECK(d.relax_v > 0.0);
}

TEST_CASE("paired runs: gauge fixing suppresses drift on the regression task") {
  const DatasetConfig dcfg;
  for (std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    TrainConfig cfg;
    cfg.steps = 2000;
    const ScaleDrift base = scale_drift(train_seeded(seed, cfg, dcfg, 20));
    cfg.lambda = 0.2;
    const ScaleDrift fixed = scale_drift(train_seeded(seed, cfg, dcfg, 20));
    CHECK(base.drift_v > fixed.drift_v);
  }
}

TEST_CASE("flow without a vector field stays put") {
  const Instance in = random_instance(8);
  FlowConfig cfg;
  cfg.lambda = 0.0;
  cfg.t_end = 0.5;
  cfg.dt = 0.01;
  const FlowTrace f = integrate_gauge_flow(in.p, cfg);
  CHECK(f.final_params == in.p);
  REQUIRE(f.times.size() == 51);
  CHECK(f.times.front() == 0.0);
  for (std::size_t k = 1; k < f.times.size(); ++k) CHECK(f.times[k] > f.times[k - 1]);
  CHECK(f.times.back() == 0.5);
  for (double g : f.gauge) CHECK(g == f.gauge.front());
}

TEST_CASE("flow argument checks") {
  const Instance in = random_instance(9);
  FlowConfig cfg;
  cfg.include_task = true;
  CHECK_THROWS_AS(integrate_gauge_flow(in.p, cfg), std::invalid_argument);
  cfg.include_task = false;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(integrate_gauge_flow(in.p, cfg), std::invalid_argument);
  cfg.dt = 0.1;
  cfg.t_end = 0.01;
  CHECK_THROWS_AS(integrate_gauge_flow(in.p, cfg), std::invalid_argument);
}

TEST_CASE("a final partial step lands on t_end") {
  const Instance in = random_instance(10);
  FlowConfig cfg;
  cfg.lambda = 0.1;
  cfg.t_end = 0.25;
  cfg.dt = 0.1;
  const FlowTrace f = integrate_gauge_flow(in.p, cfg);
  REQUIRE(f.times.size() == 4);
  CHECK(f.times.back() == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("relaxation law along gauge-only flow") {
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const Instance in = random_instance(seed, 2, 6, 0.5, 2.0);
    FlowConfig cfg;
    cfg.lambda = 0.5;
    cfg.t_end = 2.0;
    cfg.dt = 1e-3;
    const FlowTrace f = integrate_gauge_flow(in.p, cfg);
    REQUIRE_FALSE(f.truncated);
    for (std::size_t i = 0; i < 6; ++i) {
      std::vector<double> kappa;
      for (const GaugeCoords& c : f.coords) kappa.push_back(damping_rates(c, cfg.lambda, cfg.eps).kappa[i]);
      const double predicted = f.coords.front().v[i] * std::exp(-oracle::trapezoid(f.times, kappa));
      const double measured = f.coords.back().v[i];
      CHECK(oracle::relative_error(measured, predicted, 1e-12) <= 1e-4);
    }
  }
}

TEST_CASE("e-folding time near the balanced regime") {
  const double n = 1.0, lambda = 0.4, v0 = 1e-2;
  const std::size_t h = 3;
  Params p = Params::zeros(1, h, 1);
  for (std::size_t i = 0; i < h; ++i) {
    p.w1(i, 0) = n * std::exp(0.5 * v0);
    p.w2(0, i) = n * std::exp(-0.5 * v0);
  }
  FlowConfig cfg;
  cfg.lambda = lambda;
  cfg.t_end = 2.0;
  cfg.dt = 1e-3;
  const FlowTrace f = integrate_gauge_flow(p, cfg);
  const double tau_expected = (n + cfg.eps) * (n + cfg.eps) * h / (4.0 * lambda);
  for (std::size_t i = 0; i < h; ++i) {
    const double tau = -cfg.t_end / std::log(f.coords.back().v[i] / f.coords.front().v[i]);
    CHECK(std::abs(tau / tau_expected - 1.0) <= 0.02);
  }
}

TEST_CASE("G never increases along gauge-only flow") {
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    const Instance in = random_instance(seed, 3, 6, 0.3, 3.0);
    FlowConfig cfg;
    cfg.lambda = 0.5;
    cfg.t_end = 1.0;
    // RK4 is stable for dt * kappa_max below about 2.78; norms >= 0.3 keep
    // kappa_max <= 2 lambda / H * 2 / 0.09, far under 2.78 / dt.
    cfg.dt = 1e-2;
    const FlowTrace f = integrate_gauge_flow(in.p, cfg);
    for (std::size_t k = 1; k < f.gauge.size(); ++k) CHECK(f.gauge[k] <= f.gauge[k - 1]);
  }
}

TEST_CASE("u is conserved at a balanced start") {
  Params p = Params::zeros(2, 3, 2);
  RngStream rng(40);
  for (std::size_t i = 0; i < 3; ++i) {
    const double n = std::exp(rng.uniform(-1, 1));
    p.w1(i, 0) = 0.6 * n;
    p.w1(i, 1) = 0.8 * n;
    p.w2(0, i) = -0.8 * n;
    p.w2(1, i) = 0.6 * n;
  }
  FlowConfig cfg;
  cfg.lambda = 0.5;
  cfg.t_end = 1.0;
  cfg.dt = 1e-3;
  const FlowTrace f = integrate_gauge_flow(p, cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(f.coords.back().u[i] - f.coords.front().u[i]) <= 1e-10);
  }
}

TEST_CASE("RK4 convergence order on gauge-only flow") {
  const Instance in = random_instance(41, 2, 4, 0.5, 2.0);
  auto run = [&](double dt) {
    FlowConfig cfg;
    cfg.lambda = 0.5;
    cfg.t_end = 1.0;
    cfg.dt = dt;
    return integrate_gauge_flow(in.p, cfg).final_params;
  };
  const Params a = run(0.1), b = run(0.05), c = run(0.025);
  const double order = std::log2(flat_distance(a, b) / flat_distance(b, c));
  MESSAGE("observed order " << order);
  CHECK(order >= 3.5);
}

TEST_CASE("function deviation: orbit moves versus the penalty flow") {
  const Instance in = random_instance(42, 2, 5, 0.5, 2.0);
  std::vector<Vector> xs;
  RngStream rng(43);
  for (int k = 0; k < 64; ++k) xs.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});

  const Params orbit = apply_gauge_transform(in.p, balanced_rescaling(in.p, 1e-8));
  CHECK(mean_abs_output_deviation(in.p, orbit, xs) <= 1e-6);

  // The penalty flow leaves the orbit; the deviation is reported, not bounded.
  FlowConfig cfg;
  cfg.lambda = 0.5;
  cfg.t_end = 1.0;
  const FlowTrace f = integrate_gauge_flow(in.p, cfg);
  MESSAGE("gauge-only flow output deviation " << mean_abs_output_deviation(in.p, f.final_params, xs));
}

TEST_CASE("predicted velocities match one tiny flow step") {
  for (std::uint64_t seed = 50; seed < 55; ++seed) {
    const Instance in = random_instance(seed, 2, 5, 0.5, 2.0);
    FlowConfig cfg;
    cfg.lambda = 0.3;
    cfg.dt = 1e-5;
    cfg.t_end = 1e-5;

    cfg.include_task = true;
    const FlowTrace full = integrate_gauge_flow(in.p, cfg, &in.train);
    const GaugeCoords& c0 = full.coords.front();
    const Vector pred = predicted_v_dot(c0, radial_forces(in.p, task_gradients(in.p, in.train), cfg.eps),
                                        damping_rates(c0, cfg.lambda, cfg.eps));
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      scale = std::max(scale, std::abs(pred[i]));
      err = std::max(err, std::abs((full.coords.back().v[i] - c0.v[i]) / cfg.dt - pred[i]));
    }
    CHECK(err / scale <= 1e-3);

    cfg.include_task = false;
    const FlowTrace gauge = integrate_gauge_flow(in.p, cfg);
    const Vector udot = gauge_only_u_dot(c0, cfg.lambda, cfg.eps, 5);
    scale = 0.0;
    err = 0.0;
    for (std::size_t i = 0; i < udot.size(); ++i) {
      scale = std::max(scale, std::abs(udot[i]));
      err = std::max(err, std::abs((gauge.coords.back().u[i] - c0.u[i]) / cfg.dt - udot[i]));
    }
    CHECK(err / scale <= 1e-3);
  }
}
