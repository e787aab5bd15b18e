#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gaugefix/gauge.hpp"
#include "gaugefix/network.hpp"

namespace gaugefix {

struct TrainConfig {
  double lr = 5e-3;
  double lambda = 0.0;
  double eps = kDefaultEps;
  std::size_t steps = 5000;
  std::uint64_t seed = 0;
  // A run is Unstable once train loss exceeds this multiple of its initial value.
  double divergence_threshold = 1e4;
  // Marginal: trailing window (fraction of the trace) rebounds by more than this.
  double marginal_window_frac = 0.1;
  double marginal_amplitude = 0.1;

  void check() const;
};

// Raised by gd_step when the update would not be finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceRecord {
  std::size_t step = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double gauge = 0.0;
  double mean_abs_v = 0.0;
  double max_abs_v = 0.0;
  double mean_u = 0.0;
  double param_max_abs = 0.0;

  bool finite() const;
};

enum class Stability { Stable = 0, Marginal = 1, Unstable = 2 };

std::string_view to_string(Stability s);

struct StabilityLabel {
  Stability kind = Stability::Stable;
  // Unstable: largest train-loss ratio to step 0 (inf for non-finite metrics).
  // Marginal/Stable: largest relative rebound in the trailing window.
  double statistic = 0.0;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  Params final_params;  // last iterate with finite metrics
  StabilityLabel label;
  std::optional<std::size_t> truncated_at;
  double divergence_threshold = 1e4;

  // Last record whose metrics are all finite.
  const TraceRecord& last_finite() const;
};

struct FlowConfig {
  double lambda = 0.0;
  double eps = kDefaultEps;
  double t_end = 1.0;
  double dt = 1e-3;
  bool include_task = false;
  // Truncate once any parameter magnitude exceeds this.
  double divergence_threshold = 1e6;
};

struct FlowTrace {
  std::vector<double> times;
  std::vector<GaugeCoords> coords;
  std::vector<double> gauge;
  Params final_params;
  bool truncated = false;
};

struct ScaleDrift {
  // max_t mean|v|(t) - mean|v|(0): growth of imbalance beyond its start.
  double drift_v = 0.0;
  // max_t |mean u(t) - mean u(0)|.
  double drift_u = 0.0;
  // mean|v|(0) - mean|v|(end): net relaxation of imbalance.
  double relax_v = 0.0;
};

// L_task + lambda * G.
double total_loss(const Params& p, const Dataset& data, double lambda, double eps);

// Gradient of the total loss. With lambda == 0 the gauge term is skipped
// entirely, so the result is bitwise the task gradient.
Grads total_gradients(const Params& p, const Dataset& data, double lambda, double eps);

// theta - lr * (grad L_task + lambda grad G). Throws DivergenceError on
// non-finite gradients or results.
Params gd_step(const Params& p, const Dataset& data, const TrainConfig& cfg);

TraceRecord measure(const Params& p, const Dataset& train, const Dataset& val, double eps,
                    std::size_t step);

TrainTrace train(const Params& p0, const Dataset& train_data, const Dataset& val_data,
                 const TrainConfig& cfg);

// Velocity of the gradient flow: -[include_task] grad L_task - lambda grad G.
Grads flow_velocity(const Params& p, double lambda, double eps, bool include_task,
                    const Dataset* data);

// Classical RK4 with fixed step dt; the final step is shortened to land on
// t_end. Coordinates are stored at every step including t = 0.
FlowTrace integrate_gauge_flow(const Params& p0, const FlowConfig& cfg,
                               const Dataset* data = nullptr);

std::size_t default_stability_window(const TrainTrace& trace, double frac = 0.1);
StabilityLabel classify_stability(const TrainTrace& trace, std::size_t window,
                                  double amplitude = 0.1);

ScaleDrift scale_drift(const TrainTrace& trace);

}  // namespace gaugefix
