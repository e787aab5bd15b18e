#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gaugefix/linalg.hpp"
#include "gaugefix/rng.hpp"

namespace gaugefix {

// Parameters of f(x) = W2 relu(W1 x + b1) + b2 with W1 in R^{H x d} and
// W2 in R^{m x H}. Row i of W1 is the incoming weight vector of hidden
// neuron i; column i of W2 is its outgoing weight vector.
struct Params {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;

  std::size_t input_dim() const { return w1.cols(); }
  std::size_t hidden() const { return w1.rows(); }
  std::size_t output_dim() const { return w2.rows(); }

  // Zero parameters of the given shape.
  static Params zeros(std::size_t d, std::size_t h, std::size_t m);

  // Throws std::invalid_argument on inconsistent block shapes.
  void check_shapes() const;
  std::size_t count() const;

  bool operator==(const Params&) const = default;
};

// Gradient blocks, shape-matched to a Params.
struct Grads {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;

  static Grads zeros_like(const Params& p);

  bool operator==(const Grads&) const = default;
};

// Flat views in the fixed block order (W1, b1, W2, b2), row-major.
std::vector<double> flatten(const Params& p);
std::vector<double> flatten(const Grads& g);
// Rebuilds Params with the shape of `shape` from a flat vector.
Params unflatten(const Params& shape, std::span<const double> flat);

// p + scale * g, block by block.
Params axpy(const Params& p, double scale, const Grads& g);
Grads add_scaled(const Grads& a, double scale, const Grads& b);

double max_abs(const Params& p);
bool all_finite(const Params& p);
bool all_finite(const Grads& g);

enum class Split { Train, Validation };

struct Dataset {
  std::vector<Vector> x;
  std::vector<Vector> y;
  Split split = Split::Train;

  std::size_t size() const { return x.size(); }
  // Throws std::invalid_argument unless |x| = |y| > 0 with uniform dimensions.
  void check() const;
};

// W1, W2 entries ~ N(0, 1/fan_in), biases zero. Draws W1 row-major, then W2.
Params init_params(std::size_t d, std::size_t h, std::size_t m, RngStream& rng);

inline double relu(double z) { return z > 0.0 ? z : 0.0; }

Vector forward(const Params& p, std::span<const double> x);

// (1/N) sum_n ||f(x_n) - y_n||^2.
double mse_loss(const Params& p, const Dataset& data);

// Exact gradient of mse_loss by backpropagation; relu'(0) is taken as 0.
Grads task_gradients(const Params& p, const Dataset& data);

struct LossAndGrads {
  double loss = 0.0;
  Grads grads;
};
LossAndGrads task_loss_and_gradients(const Params& p, const Dataset& data);

}  // namespace gaugefix
