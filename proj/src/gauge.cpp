#include "gaugefix/gauge.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gaugefix {

namespace {

void require_eps(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
}

double inv_sq(double x) { return 1.0 / (x * x); }

}  // namespace

GaugeScales::GaugeScales(Vector s) : s_(std::move(s)) {
  for (std::size_t i = 0; i < s_.size(); ++i) {
    if (!(s_[i] > 0.0) || !std::isfinite(s_[i])) {
      throw std::invalid_argument("GaugeScales: s[" + std::to_string(i) +
                                  "] must be finite and > 0");
    }
  }
}

GaugeScales GaugeScales::inverse() const {
  Vector inv(s_.size());
  for (std::size_t i = 0; i < s_.size(); ++i) inv[i] = 1.0 / s_[i];
  return GaugeScales(std::move(inv));
}

GaugeScales random_log_uniform_scales(std::size_t h, RngStream& rng, double log_range) {
  Vector s(h);
  for (auto& x : s) x = std::exp(rng.uniform(-log_range, log_range));
  return GaugeScales(std::move(s));
}

Params apply_gauge_transform(const Params& p, const GaugeScales& s) {
  p.check_shapes();
  if (s.size() != p.hidden()) {
    throw std::invalid_argument("apply_gauge_transform: " + std::to_string(s.size()) +
                                " scales for " + std::to_string(p.hidden()) + " hidden neurons");
  }
  Params out = p;
  for (std::size_t i = 0; i < p.hidden(); ++i) {
    for (double& w : out.w1.row(i)) w *= s[i];
    out.b1[i] *= s[i];
    for (std::size_t k = 0; k < out.w2.rows(); ++k) out.w2(k, i) /= s[i];
  }
  return out;
}

NeuronNorms neuron_norms(const Params& p) {
  p.check_shapes();
  const std::size_t h = p.hidden();
  NeuronNorms out{Vector(h), Vector(h)};
  for (std::size_t i = 0; i < h; ++i) {
    out.n1[i] = l2_norm(p.w1.row(i));
    out.n2[i] = l2_norm(p.w2.column(i));
  }
  return out;
}

std::vector<bool> degenerate_neurons(const NeuronNorms& norms) {
  std::vector<bool> out(norms.n1.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = norms.n1[i] == 0.0 || norms.n2[i] == 0.0;
  return out;
}

GaugeCoords gauge_coords(const NeuronNorms& norms, double eps) {
  require_eps(eps);
  const std::size_t h = norms.n1.size();
  GaugeCoords c{norms.n1, norms.n2, Vector(h), Vector(h), Vector(h), Vector(h)};
  for (std::size_t i = 0; i < h; ++i) {
    c.alpha[i] = std::log(c.n1[i] + eps);
    c.beta[i] = std::log(c.n2[i] + eps);
    c.u[i] = c.alpha[i] + c.beta[i];
    c.v[i] = c.alpha[i] - c.beta[i];
  }
  return c;
}

GaugeCoords gauge_coords(const Params& p, double eps) { return gauge_coords(neuron_norms(p), eps); }

double gauge_functional(const NeuronNorms& norms, double eps) {
  const GaugeCoords c = gauge_coords(norms, eps);
  if (c.size() == 0) return 0.0;
  double sum = 0.0;
  for (double v : c.v) sum += v * v;
  return sum / static_cast<double>(c.size());
}

double gauge_functional(const Params& p, double eps) {
  return gauge_functional(neuron_norms(p), eps);
}

GaugeGradient gauge_gradients(const Params& p, double eps) {
  const NeuronNorms norms = neuron_norms(p);
  const GaugeCoords c = gauge_coords(norms, eps);
  const std::size_t h = p.hidden();
  GaugeGradient out{0.0, Grads::zeros_like(p), degenerate_neurons(norms)};
  if (h == 0) return out;
  const double hd = static_cast<double>(h);

  double sum = 0.0;
  for (double v : c.v) sum += v * v;
  out.value = sum / hd;

  for (std::size_t i = 0; i < h; ++i) {
    if (out.degenerate[i]) continue;
    const double coef_w = (2.0 / hd) * c.v[i] / (c.n1[i] * (c.n1[i] + eps));
    const double coef_a = -(2.0 / hd) * c.v[i] / (c.n2[i] * (c.n2[i] + eps));
    const auto w = p.w1.row(i);
    auto gw = out.grads.w1.row(i);
    for (std::size_t j = 0; j < w.size(); ++j) gw[j] = coef_w * w[j];
    for (std::size_t k = 0; k < p.w2.rows(); ++k) out.grads.w2(k, i) = coef_a * p.w2(k, i);
  }
  return out;
}

GaugeScales balanced_rescaling(const Params& p, double eps) {
  require_eps(eps);
  const NeuronNorms norms = neuron_norms(p);
  Vector s(p.hidden(), 1.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (norms.n1[i] == 0.0 && norms.n2[i] == 0.0) continue;
    s[i] = std::sqrt((norms.n2[i] + eps) / (norms.n1[i] + eps));
  }
  return GaugeScales(std::move(s));
}

double mean_abs_output_deviation(const Params& p, const Params& q,
                                 std::span<const Vector> inputs) {
  if (inputs.empty()) throw std::invalid_argument("mean_abs_output_deviation: no inputs");
  double total = 0.0;
  std::size_t count = 0;
  for (const Vector& x : inputs) {
    const Vector fp = forward(p, x);
    const Vector fq = forward(q, x);
    for (std::size_t k = 0; k < fp.size(); ++k) total += std::abs(fp[k] - fq[k]);
    count += fp.size();
  }
  return total / static_cast<double>(count);
}

double invariance_error(const Params& p, const GaugeScales& s, std::span<const Vector> inputs) {
  return mean_abs_output_deviation(p, apply_gauge_transform(p, s), inputs);
}

DampingRates damping_rates(const GaugeCoords& coords, double lambda, double eps) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("damping_rates: lambda must be >= 0");
  require_eps(eps);
  const std::size_t h = coords.size();
  DampingRates out{Vector(h, 0.0)};
  for (std::size_t i = 0; i < h; ++i) {
    out.kappa[i] = (2.0 * lambda / static_cast<double>(h)) *
                   (inv_sq(coords.n1[i] + eps) + inv_sq(coords.n2[i] + eps));
  }
  return out;
}

DampingRates damping_rates(const Params& p, double lambda, double eps) {
  return damping_rates(gauge_coords(p, eps), lambda, eps);
}

RadialForces radial_forces(const Params& p, const Grads& task_grads, double eps) {
  require_eps(eps);
  const NeuronNorms norms = neuron_norms(p);
  const std::size_t h = p.hidden();
  RadialForces out{Vector(h, 0.0), Vector(h, 0.0), degenerate_neurons(norms)};
  for (std::size_t i = 0; i < h; ++i) {
    if (out.degenerate[i]) continue;
    const double n1 = norms.n1[i];
    const double n2 = norms.n2[i];
    out.f1[i] = dot(p.w1.row(i), task_grads.w1.row(i)) / (n1 * (n1 + eps));
    out.f2[i] = dot(p.w2.column(i), task_grads.w2.column(i)) / (n2 * (n2 + eps));
  }
  return out;
}

Vector predicted_v_dot(const GaugeCoords& coords, const RadialForces& forces,
                       const DampingRates& kappa) {
  const std::size_t h = coords.v.size();
  if (forces.f1.size() != h || forces.f2.size() != h || kappa.kappa.size() != h) {
    throw std::invalid_argument("predicted_v_dot: inconsistent lengths");
  }
  Vector out(h);
  for (std::size_t i = 0; i < h; ++i) {
    out[i] = -(forces.f1[i] - forces.f2[i]) - kappa.kappa[i] * coords.v[i];
  }
  return out;
}

Vector gauge_only_u_dot(const GaugeCoords& coords, double lambda, double eps, std::size_t h) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("gauge_only_u_dot: lambda must be >= 0");
  Vector out(coords.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (2.0 * lambda / static_cast<double>(h)) * coords.v[i] *
             (-inv_sq(coords.n1[i] + eps) + inv_sq(coords.n2[i] + eps));
  }
  return out;
}

}  // namespace gaugefix
