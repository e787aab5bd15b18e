#include "gaugefix/validation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>

#include "gaugefix/dynamics.hpp"
#include "gaugefix/experiments.hpp"
#include "gaugefix/gauge.hpp"
#include "gaugefix/instances.hpp"

namespace gaugefix {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kKinkMargin = 1e-3;

double central_difference(const std::function<double(const Params&)>& f, const Params& p,
                          std::size_t k) {
  std::vector<double> theta = flatten(p);
  const double orig = theta[k];
  theta[k] = orig + kFdStep;
  const double up = f(unflatten(p, theta));
  theta[k] = orig - kFdStep;
  const double down = f(unflatten(p, theta));
  return (up - down) / (2.0 * kFdStep);
}

// Worst relative error between an analytic gradient and central differences,
// skipping coordinates in `skip`.
double worst_gradient_error(const std::function<double(const Params&)>& f, const Params& p,
                            const Grads& analytic, const std::vector<bool>& skip) {
  const std::vector<double> g = flatten(analytic);
  double worst = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (skip[k]) continue;
    const double fd = central_difference(f, p, k);
    const double denom = std::max({std::abs(g[k]), std::abs(fd), kKinkMargin});
    worst = std::max(worst, std::abs(g[k] - fd) / denom);
  }
  return worst;
}

// | |cos(x, g)| - 1 |, or 0 when g vanishes.
double radial_misalignment(std::span<const double> x, std::span<const double> g) {
  const double ng = l2_norm(g);
  if (ng == 0.0) return 0.0;
  return std::abs(std::abs(dot(x, g)) / (l2_norm(x) * ng) - 1.0);
}

double max_rel_mismatch(const Vector& measured, const Vector& predicted) {
  double err = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    err = std::max(err, std::abs(measured[i] - predicted[i]));
    scale = std::max(scale, std::abs(predicted[i]));
  }
  return scale > 0.0 ? err / scale : err;
}

}  // namespace

std::vector<CheckResult> run_validation(std::ostream& out, unsigned long long seed) {
  std::vector<CheckResult> results;
  RngStream rng(seed);
  auto record = [&](std::string name, double measured, double tol, bool passed) {
    out << (passed ? "PASS " : "FAIL ") << std::left << std::setw(34) << name
        << " measured=" << std::setprecision(3) << std::scientific << measured
        << " tol=" << tol << std::defaultfloat << '\n';
    results.push_back({std::move(name), passed, measured, tol});
  };

  {
    const Params p = random_network(1, 20, 1, rng, 0.1, 10.0);
    const InvarianceResult inv = invariance_experiment(p, 200, 512, rng.next_u64());
    record("orbit invariance (200 scalings)", inv.max, 1e-12, inv.max <= 1e-12);

    Vector pow2(20);
    for (auto& s : pow2) s = std::ldexp(1.0, static_cast<int>(rng.uniform(-6.0, 6.0)));
    std::vector<Vector> xs;
    for (int n = 0; n < 64; ++n) xs.push_back({rng.uniform(-3.0, 3.0)});
    const double exact = invariance_error(p, GaugeScales(pow2), xs);
    record("power-of-two invariance exact", exact, 0.0, exact == 0.0);
  }

  {
    double worst_task = 0.0;
    double worst_gauge = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
      const auto d = static_cast<std::size_t>(1 + inst % 3);
      const auto h = static_cast<std::size_t>(2 + inst % 7);
      const Params p = random_network(d, h, 1, rng, 0.3, 3.0);
      const Dataset data = random_dataset(d, 1, 8, rng);
      const std::vector<bool> near_kink = kink_coordinates(p, data, kKinkMargin);
      worst_task = std::max(worst_task,
                            worst_gradient_error([&](const Params& q) { return mse_loss(q, data); },
                                                 p, task_gradients(p, data), near_kink));
      const std::vector<bool> none(p.count(), false);
      worst_gauge = std::max(
          worst_gauge,
          worst_gradient_error([](const Params& q) { return gauge_functional(q, kDefaultEps); }, p,
                               gauge_gradients(p, kDefaultEps).grads, none));
    }
    record("task gradient vs finite diff", worst_task, 1e-6, worst_task <= 1e-6);
    record("gauge gradient vs finite diff", worst_gauge, 1e-6, worst_gauge <= 1e-6);
  }

  {
    double worst = 0.0;
    bool bias_zero = true;
    for (int inst = 0; inst < 10; ++inst) {
      const Params p = random_network(3, 8, 2, rng, 0.1, 10.0);
      const GaugeGradient g = gauge_gradients(p);
      for (std::size_t i = 0; i < p.hidden(); ++i) {
        worst = std::max(worst, radial_misalignment(p.w1.row(i), g.grads.w1.row(i)));
        worst = std::max(worst, radial_misalignment(p.w2.column(i), g.grads.w2.column(i)));
      }
      for (double b : g.grads.b1) bias_zero = bias_zero && b == 0.0;
      for (double b : g.grads.b2) bias_zero = bias_zero && b == 0.0;
    }
    record("gauge gradient radial |cos|=1", worst, 1e-12, worst <= 1e-12);
    record("gauge gradient bias blocks zero", bias_zero ? 0.0 : 1.0, 0.0, bias_zero);
  }

  {
    double worst_g = 0.0;
    double worst_f = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
      const Params p = random_network(2, 8, 1, rng, 0.1, 10.0);
      const Params q = apply_gauge_transform(p, balanced_rescaling(p, 1e-12));
      worst_g = std::max(worst_g, gauge_functional(q, 1e-12));
      std::vector<Vector> xs;
      for (int n = 0; n < 32; ++n) xs.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
      for (const Vector& x : xs) {
        worst_f = std::max(worst_f, std::abs(forward(p, x)[0] - forward(q, x)[0]));
      }
    }
    record("balanced representative G", worst_g, 1e-12, worst_g <= 1e-12);
    record("balanced representative f", worst_f, 1e-12, worst_f <= 1e-12);
  }

  {
    constexpr double eps = 1e-15;
    double worst_u = 0.0;
    double worst_v = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
      const Params p = random_network(2, 8, 1, rng, 0.1, 10.0);
      const GaugeScales s = random_log_uniform_scales(p.hidden(), rng);
      const GaugeCoords before = gauge_coords(p, eps);
      const GaugeCoords after = gauge_coords(apply_gauge_transform(p, s), eps);
      for (std::size_t i = 0; i < p.hidden(); ++i) {
        worst_u = std::max(worst_u, std::abs(after.u[i] - before.u[i]));
        worst_v = std::max(worst_v, std::abs(after.v[i] - before.v[i] - 2.0 * std::log(s[i])));
      }
    }
    record("u invariant under transform", worst_u, 1e-12, worst_u <= 1e-12);
    record("v shifts by 2 log s", worst_v, 1e-10, worst_v <= 1e-10);
  }

  {
    FlowConfig cfg;
    cfg.lambda = 0.5;
    cfg.t_end = 2.0;
    cfg.dt = 1e-3;
    const Params p = random_network(2, 4, 1, rng, 0.5, 2.0);
    const FlowTrace flow = integrate_gauge_flow(p, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.hidden(); ++i) {
      double integral = 0.0;
      for (std::size_t k = 1; k < flow.times.size(); ++k) {
        const double k0 = damping_rates(flow.coords[k - 1], cfg.lambda, cfg.eps).kappa[i];
        const double k1 = damping_rates(flow.coords[k], cfg.lambda, cfg.eps).kappa[i];
        integral += 0.5 * (k0 + k1) * (flow.times[k] - flow.times[k - 1]);
      }
      const double predicted = flow.coords.front().v[i] * std::exp(-integral);
      const double measured = flow.coords.back().v[i];
      worst = std::max(worst, std::abs(measured - predicted) / std::abs(predicted));
    }
    record("relaxation law v(t)", worst, 1e-4, worst <= 1e-4);
  }

  {
    double worst_v = 0.0;
    double worst_u = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
      const Params p = random_network(2, 6, 1, rng, 0.5, 2.0);
      const Dataset data = random_dataset(2, 1, 16, rng);
      constexpr double lambda = 0.3;
      constexpr double dt = 1e-5;
      FlowConfig cfg{lambda, kDefaultEps, dt, dt, true, 1e6};
      const FlowTrace flow = integrate_gauge_flow(p, cfg, &data);
      const GaugeCoords& c0 = flow.coords.front();
      const GaugeCoords& c1 = flow.coords.back();
      const Vector pred = predicted_v_dot(c0, radial_forces(p, task_gradients(p, data)),
                                          damping_rates(c0, lambda, kDefaultEps));
      Vector meas(c0.size());
      for (std::size_t i = 0; i < meas.size(); ++i) meas[i] = (c1.v[i] - c0.v[i]) / dt;
      worst_v = std::max(worst_v, max_rel_mismatch(meas, pred));

      cfg.include_task = false;
      const FlowTrace gauge_only = integrate_gauge_flow(p, cfg);
      const Vector u_pred = gauge_only_u_dot(c0, lambda, kDefaultEps, p.hidden());
      Vector u_meas(c0.size());
      for (std::size_t i = 0; i < u_meas.size(); ++i) {
        u_meas[i] = (gauge_only.coords.back().u[i] - c0.u[i]) / dt;
      }
      worst_u = std::max(worst_u, max_rel_mismatch(u_meas, u_pred));
    }
    record("predicted v-dot vs flow step", worst_v, 1e-3, worst_v <= 1e-3);
    record("gauge-only u-dot vs flow step", worst_u, 1e-3, worst_u <= 1e-3);
  }

  return results;
}

}  // namespace gaugefix
