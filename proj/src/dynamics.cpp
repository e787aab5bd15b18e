#include "gaugefix/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gaugefix {

namespace {

TraceRecord record_from(const Params& p, double train_mse, const Dataset& val, double eps,
                        std::size_t step) {
  const NeuronNorms norms = neuron_norms(p);
  const GaugeCoords c = gauge_coords(norms, eps);
  TraceRecord r;
  r.step = step;
  r.train_mse = train_mse;
  r.val_mse = mse_loss(p, val);
  r.gauge = gauge_functional(norms, eps);
  const double h = static_cast<double>(c.size());
  double sum_abs_v = 0.0;
  double sum_u = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    sum_abs_v += std::abs(c.v[i]);
    r.max_abs_v = std::max(r.max_abs_v, std::abs(c.v[i]));
    if (std::isnan(c.v[i])) r.max_abs_v = c.v[i];
    sum_u += c.u[i];
  }
  r.mean_abs_v = sum_abs_v / h;
  r.mean_u = sum_u / h;
  r.param_max_abs = max_abs(p);
  return r;
}

Params descend(const Params& p, double lr, const Grads& task, double lambda,
               const Grads* gauge) {
  std::vector<double> theta = flatten(p);
  const std::vector<double> gt = flatten(task);
  if (gauge == nullptr) {
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= lr * gt[k];
  } else {
    const std::vector<double> gg = flatten(*gauge);
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= lr * (gt[k] + lambda * gg[k]);
  }
  return unflatten(p, theta);
}

}  // namespace

void TrainConfig::check() const {
  if (!(lr >= 0.0)) throw std::invalid_argument("TrainConfig: lr must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
  if (!(eps > 0.0)) throw std::invalid_argument("TrainConfig: eps must be > 0");
  if (!(divergence_threshold > 0.0)) {
    throw std::invalid_argument("TrainConfig: divergence_threshold must be > 0");
  }
}

bool TraceRecord::finite() const {
  return std::isfinite(train_mse) && std::isfinite(val_mse) && std::isfinite(gauge) &&
         std::isfinite(mean_abs_v) && std::isfinite(max_abs_v) && std::isfinite(mean_u) &&
         std::isfinite(param_max_abs);
}

std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable:
      return "Stable";
    case Stability::Marginal:
      return "Marginal";
    case Stability::Unstable:
      return "Unstable";
  }
  return "?";
}

const TraceRecord& TrainTrace::last_finite() const {
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->finite()) return *it;
  }
  return records.front();
}

double total_loss(const Params& p, const Dataset& data, double lambda, double eps) {
  return mse_loss(p, data) + lambda * gauge_functional(p, eps);
}

Grads total_gradients(const Params& p, const Dataset& data, double lambda, double eps) {
  Grads g = task_gradients(p, data);
  if (lambda == 0.0) return g;
  return add_scaled(g, lambda, gauge_gradients(p, eps).grads);
}

Params gd_step(const Params& p, const Dataset& data, const TrainConfig& cfg) {
  cfg.check();
  const Grads task = task_gradients(p, data);
  std::optional<GaugeGradient> gauge;
  if (cfg.lambda != 0.0) gauge = gauge_gradients(p, cfg.eps);
  if (!all_finite(task) || (gauge && !all_finite(gauge->grads))) {
    throw DivergenceError("gd_step: non-finite gradient");
  }
  Params next = descend(p, cfg.lr, task, cfg.lambda, gauge ? &gauge->grads : nullptr);
  if (!all_finite(next)) throw DivergenceError("gd_step: non-finite parameters after update");
  return next;
}

TraceRecord measure(const Params& p, const Dataset& train, const Dataset& val, double eps,
                    std::size_t step) {
  return record_from(p, mse_loss(p, train), val, eps, step);
}

TrainTrace train(const Params& p0, const Dataset& train_data, const Dataset& val_data,
                 const TrainConfig& cfg) {
  cfg.check();
  p0.check_shapes();
  TrainTrace trace;
  trace.divergence_threshold = cfg.divergence_threshold;
  trace.records.reserve(cfg.steps + 1);

  Params p = p0;
  trace.final_params = p0;
  for (std::size_t t = 0;; ++t) {
    const LossAndGrads lg = task_loss_and_gradients(p, train_data);
    const TraceRecord rec = record_from(p, lg.loss, val_data, cfg.eps, t);
    trace.records.push_back(rec);
    const double initial = trace.records.front().train_mse;
    if (!rec.finite() || (initial > 0.0 && rec.train_mse > cfg.divergence_threshold * initial)) {
      trace.truncated_at = t;
      break;
    }
    trace.final_params = p;
    if (t == cfg.steps) break;

    std::optional<GaugeGradient> gauge;
    if (cfg.lambda != 0.0) gauge = gauge_gradients(p, cfg.eps);
    if (!all_finite(lg.grads) || (gauge && !all_finite(gauge->grads))) {
      trace.truncated_at = t;
      break;
    }
    p = descend(p, cfg.lr, lg.grads, cfg.lambda, gauge ? &gauge->grads : nullptr);
  }
  trace.label = classify_stability(
      trace, default_stability_window(trace, cfg.marginal_window_frac), cfg.marginal_amplitude);
  return trace;
}

Grads flow_velocity(const Params& p, double lambda, double eps, bool include_task,
                    const Dataset* data) {
  Grads v = Grads::zeros_like(p);
  if (include_task) {
    if (data == nullptr) throw std::invalid_argument("flow_velocity: task term needs a dataset");
    v = add_scaled(v, -1.0, task_gradients(p, *data));
  }
  if (lambda != 0.0) v = add_scaled(v, -lambda, gauge_gradients(p, eps).grads);
  return v;
}

FlowTrace integrate_gauge_flow(const Params& p0, const FlowConfig& cfg, const Dataset* data) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("integrate_gauge_flow: dt must be > 0");
  if (!(cfg.t_end >= cfg.dt)) throw std::invalid_argument("integrate_gauge_flow: t_end < dt");
  if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("integrate_gauge_flow: lambda < 0");
  if (cfg.include_task && data == nullptr) {
    throw std::invalid_argument("integrate_gauge_flow: include_task requires a dataset");
  }
  p0.check_shapes();

  FlowTrace out;
  auto snapshot = [&](double t, const Params& p) {
    const NeuronNorms norms = neuron_norms(p);
    out.times.push_back(t);
    out.coords.push_back(gauge_coords(norms, cfg.eps));
    out.gauge.push_back(gauge_functional(norms, cfg.eps));
  };

  auto rhs = [&](std::span<const double> theta) {
    return flatten(flow_velocity(unflatten(p0, theta), cfg.lambda, cfg.eps, cfg.include_task,
                                 data));
  };

  std::vector<double> theta = flatten(p0);
  const std::size_t n = theta.size();
  std::vector<double> tmp(n);
  snapshot(0.0, p0);
  out.final_params = p0;

  const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
  for (std::size_t s = 0; s < steps; ++s) {
    const double t0 = static_cast<double>(s) * cfg.dt;
    const double h = (s + 1 == steps) ? cfg.t_end - t0 : cfg.dt;

    const std::vector<double> k1 = rhs(theta);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = theta[j] + 0.5 * h * k1[j];
    const std::vector<double> k2 = rhs(tmp);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = theta[j] + 0.5 * h * k2[j];
    const std::vector<double> k3 = rhs(tmp);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = theta[j] + h * k3[j];
    const std::vector<double> k4 = rhs(tmp);
    for (std::size_t j = 0; j < n; ++j) {
      theta[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }

    const Params p = unflatten(p0, theta);
    const double mag = max_abs(p);
    if (!std::isfinite(mag) || mag > cfg.divergence_threshold) {
      out.truncated = true;
      break;
    }
    snapshot(t0 + h, p);
    out.final_params = p;
  }
  return out;
}

std::size_t default_stability_window(const TrainTrace& trace, double frac) {
  const auto n = static_cast<double>(trace.records.size());
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(frac * n)));
}

StabilityLabel classify_stability(const TrainTrace& trace, std::size_t window, double amplitude) {
  if (trace.records.empty()) throw std::invalid_argument("classify_stability: empty trace");
  const double initial = trace.records.front().train_mse;

  double worst_ratio = 0.0;
  for (const TraceRecord& r : trace.records) {
    if (!r.finite()) return {Stability::Unstable, std::numeric_limits<double>::infinity()};
    if (initial > 0.0) worst_ratio = std::max(worst_ratio, r.train_mse / initial);
  }
  if (worst_ratio > trace.divergence_threshold) return {Stability::Unstable, worst_ratio};

  // Largest rise above the running minimum, relative to that minimum. Zero for
  // a monotonically non-increasing window.
  const std::size_t n = trace.records.size();
  const std::size_t start = n - std::min(window, n);
  double running_min = trace.records[start].train_mse;
  double rebound = 0.0;
  for (std::size_t t = start + 1; t < n; ++t) {
    const double loss = trace.records[t].train_mse;
    if (running_min > 0.0) rebound = std::max(rebound, (loss - running_min) / running_min);
    running_min = std::min(running_min, loss);
  }
  if (rebound > amplitude) return {Stability::Marginal, rebound};
  return {Stability::Stable, rebound};
}

ScaleDrift scale_drift(const TrainTrace& trace) {
  if (trace.records.empty()) throw std::invalid_argument("scale_drift: empty trace");
  const TraceRecord& first = trace.records.front();
  ScaleDrift d;
  for (const TraceRecord& r : trace.records) {
    if (!r.finite()) continue;
    d.drift_v = std::max(d.drift_v, r.mean_abs_v - first.mean_abs_v);
    d.drift_u = std::max(d.drift_u, std::abs(r.mean_u - first.mean_u));
  }
  d.relax_v = first.mean_abs_v - trace.last_finite().mean_abs_v;
  return d;
}

}  // namespace gaugefix
