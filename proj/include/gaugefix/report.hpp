#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gaugefix/dynamics.hpp"
#include "gaugefix/experiments.hpp"

namespace gaugefix {

inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr const char* kSweepHeader =
    "lambda,train_mse_mean,train_mse_std,val_mse_mean,val_mse_std,drift_v_mean,n_stable,"
    "n_marginal,n_unstable";
inline constexpr const char* kSweepRunsHeader =
    "lambda,seed,train_mse,val_mse,drift_v,drift_u,label";
inline constexpr const char* kStressHeader = "method,lr,val_mse_mean,label";
inline constexpr const char* kStressRunsHeader = "method,lr,seed,val_mse,label,statistic";
inline constexpr const char* kInvarianceHeader = "transform_index,delta_inv";
inline constexpr const char* kTraceHeader =
    "step,train_mse,val_mse,G,mean_abs_v,max_abs_v,mean_u,param_max_abs";
inline constexpr const char* kFlowHeader = "t,G,mean_abs_v,max_abs_v,mean_u";
inline constexpr const char* kFlowNeuronsHeader = "t,neuron,n1,n2,u,v,kappa";

// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

// Ordered key=value pairs; written one per line, LF endings.
using Metadata = std::vector<std::pair<std::string, std::string>>;

// Keys describing fixed algorithmic choices (RNG, init, conventions).
Metadata base_metadata();

struct ReportBundle {
  std::optional<TrainTrace> trace;
  std::optional<FlowTrace> flow;
  // Needed to emit kappa alongside the flow trace.
  double flow_lambda = 0.0;
  double flow_eps = kDefaultEps;
  std::optional<SweepResult> sweep;
  std::optional<StressResult> stress;
  std::optional<InvarianceResult> invariance;
  Metadata metadata;
  // Written as the final metadata line; excluded from reproducibility checks.
  std::string timestamp;
};

// Writes every present result plus metadata.txt into out_dir (created if
// needed). Returns the paths written. Throws std::runtime_error naming the
// path on I/O failure.
std::vector<std::filesystem::path> emit_reports(const ReportBundle& bundle,
                                                const std::filesystem::path& out_dir);

std::string sweep_csv(const SweepResult& r);
std::string sweep_runs_csv(const SweepResult& r);
std::string stress_csv(const StressResult& r);
std::string stress_runs_csv(const StressResult& r);
std::string invariance_csv(const InvarianceResult& r);
std::string invariance_summary(const InvarianceResult& r);
std::string trace_csv(const TrainTrace& t);
std::string flow_csv(const FlowTrace& f);
std::string flow_neurons_csv(const FlowTrace& f, double lambda, double eps);
std::string metadata_text(const Metadata& m, const std::string& timestamp);

std::string utc_timestamp();

}  // namespace gaugefix
