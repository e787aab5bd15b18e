#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gaugefix/linalg.hpp"
#include "gaugefix/network.hpp"

namespace gaugefix {

inline constexpr double kDefaultEps = 1e-8;

// Strictly positive per-neuron scales s_i, i.e. D = diag(s) acting as
// W1 -> D W1, b1 -> D b1, W2 -> W2 D^{-1}, b2 -> b2.
class GaugeScales {
 public:
  // Throws std::invalid_argument if any entry is not finite and > 0.
  explicit GaugeScales(Vector s);

  static GaugeScales identity(std::size_t h) { return GaugeScales(Vector(h, 1.0)); }

  std::size_t size() const { return s_.size(); }
  double operator[](std::size_t i) const { return s_[i]; }
  const Vector& values() const { return s_; }
  GaugeScales inverse() const;

 private:
  Vector s_;
};

// s_i = exp(Uniform(-log_range, log_range)).
GaugeScales random_log_uniform_scales(std::size_t h, RngStream& rng, double log_range = 1.0);

struct NeuronNorms {
  Vector n1;  // ||row i of W1||
  Vector n2;  // ||column i of W2||
};

// Per-neuron coordinates on the orbit:
//   alpha = log(n1 + eps), beta = log(n2 + eps), u = alpha + beta, v = alpha - beta.
// u is invariant under gauge transforms; v shifts by 2 log s.
struct GaugeCoords {
  Vector n1, n2, alpha, beta, u, v;

  std::size_t size() const { return n1.size(); }
};

struct RadialForces {
  Vector f1;
  Vector f2;
  std::vector<bool> degenerate;
};

struct DampingRates {
  Vector kappa;
};

struct GaugeGradient {
  double value = 0.0;  // G at the evaluation point
  Grads grads;
  // Neuron i has n1_i == 0 or n2_i == 0; its gradient blocks are set to zero.
  std::vector<bool> degenerate;
};

// Throws std::invalid_argument for length mismatch; GaugeScales already
// guarantees positivity.
Params apply_gauge_transform(const Params& p, const GaugeScales& s);

NeuronNorms neuron_norms(const Params& p);
std::vector<bool> degenerate_neurons(const NeuronNorms& norms);

// G = (1/H) sum_i [log(n1_i + eps) - log(n2_i + eps)]^2.
double gauge_functional(const Params& p, double eps = kDefaultEps);
double gauge_functional(const NeuronNorms& norms, double eps);

// Closed-form radial gradient of G; bias blocks are identically zero.
GaugeGradient gauge_gradients(const Params& p, double eps = kDefaultEps);

GaugeCoords gauge_coords(const Params& p, double eps = kDefaultEps);
GaugeCoords gauge_coords(const NeuronNorms& norms, double eps);

// s*_i = sqrt((n2_i + eps) / (n1_i + eps)); neurons with n1 = n2 = 0 get 1.
GaugeScales balanced_rescaling(const Params& p, double eps = kDefaultEps);

// Mean over inputs and output dimensions of |f_p(x) - f_q(x)|.
double mean_abs_output_deviation(const Params& p, const Params& q,
                                 std::span<const Vector> inputs);
double invariance_error(const Params& p, const GaugeScales& s, std::span<const Vector> inputs);

// kappa_i = (2 lambda / H) [(n1_i + eps)^-2 + (n2_i + eps)^-2].
DampingRates damping_rates(const Params& p, double lambda, double eps = kDefaultEps);
DampingRates damping_rates(const GaugeCoords& coords, double lambda, double eps);

// F1_i = <grad_w alpha_i, grad_w L>, F2_i = <grad_a beta_i, grad_a L>, with
// grad_w alpha_i = w_i / (n1 (n1 + eps)) and grad_a beta_i = a_i / (n2 (n2 + eps)).
RadialForces radial_forces(const Params& p, const Grads& task_grads, double eps = kDefaultEps);

// dv_i/dt = -(F1_i - F2_i) - kappa_i v_i.
Vector predicted_v_dot(const GaugeCoords& coords, const RadialForces& forces,
                       const DampingRates& kappa);

// Gauge-only drift of u: (2 lambda / H) v_i [(n2 + eps)^-2 - (n1 + eps)^-2].
Vector gauge_only_u_dot(const GaugeCoords& coords, double lambda, double eps, std::size_t h);

}  // namespace gaugefix
