#include "gaugefix/report.hpp"

#include <algorithm>
#include <charconv>
#include <concepts>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "gaugefix/rng.hpp"

namespace gaugefix {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

class CsvBuilder {
 public:
  explicit CsvBuilder(const char* header) { text_ << header << '\n'; }

  CsvBuilder& field(double x) { return raw(format_double(x)); }
  template <std::integral T>
  CsvBuilder& field(T x) {
    return raw(std::to_string(x));
  }
  CsvBuilder& field(std::string_view s) { return raw(s); }
  CsvBuilder& end_row() {
    text_ << '\n';
    first_ = true;
    return *this;
  }
  std::string str() const { return text_.str(); }

 private:
  CsvBuilder& raw(std::string_view s) {
    if (!first_) text_ << ',';
    text_ << s;
    first_ = false;
    return *this;
  }

  std::ostringstream text_;
  bool first_ = true;
};

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

Metadata base_metadata() {
  return {
      {"tool", "gaugefix"},
      {"tool_version", kToolVersion},
      {"rng_algorithm", std::string(RngStream::kAlgorithm)},
      {"seed_derivation", "dataset=splitmix64(seed,0) init=splitmix64(seed,1)"},
      {"init_scheme", "W ~ N(0, 1/fan_in), biases zero"},
      {"relu_derivative_at_zero", "0"},
      {"stability_unstable", "non-finite metric or train_mse > divergence_threshold * initial"},
      {"stability_marginal", "trailing-window rebound above running min > marginal_amplitude"},
  };
}

std::string sweep_csv(const SweepResult& r) {
  CsvBuilder csv(kSweepHeader);
  for (const SweepRow& row : r.rows) {
    csv.field(row.lambda)
        .field(row.train_mse_mean)
        .field(row.train_mse_std)
        .field(row.val_mse_mean)
        .field(row.val_mse_std)
        .field(row.drift_v_mean)
        .field(row.n_stable)
        .field(row.n_marginal)
        .field(row.n_unstable)
        .end_row();
  }
  return csv.str();
}

std::string sweep_runs_csv(const SweepResult& r) {
  CsvBuilder csv(kSweepRunsHeader);
  for (const RunSummary& run : r.runs) {
    csv.field(run.lambda)
        .field(run.seed)
        .field(run.train_mse)
        .field(run.val_mse)
        .field(run.drift_v)
        .field(run.drift_u)
        .field(to_string(run.label.kind))
        .end_row();
  }
  return csv.str();
}

std::string stress_csv(const StressResult& r) {
  CsvBuilder csv(kStressHeader);
  for (const StressRow& row : r.rows) {
    csv.field(row.method).field(row.lr).field(row.val_mse_mean).field(to_string(row.aggregate));
    csv.end_row();
  }
  return csv.str();
}

std::string stress_runs_csv(const StressResult& r) {
  CsvBuilder csv(kStressRunsHeader);
  const std::size_t ns = r.rows.empty() ? 0 : r.runs.size() / r.rows.size();
  for (std::size_t k = 0; k < r.runs.size(); ++k) {
    const RunSummary& run = r.runs[k];
    csv.field(r.rows[k / ns].method)
        .field(run.lr)
        .field(run.seed)
        .field(run.val_mse)
        .field(to_string(run.label.kind))
        .field(run.label.statistic)
        .end_row();
  }
  return csv.str();
}

std::string invariance_csv(const InvarianceResult& r) {
  CsvBuilder csv(kInvarianceHeader);
  for (std::size_t t = 0; t < r.deltas.size(); ++t) csv.field(t).field(r.deltas[t]).end_row();
  return csv.str();
}

std::string invariance_summary(const InvarianceResult& r) {
  std::ostringstream out;
  out << "n=" << r.deltas.size() << '\n'
      << "min=" << format_double(r.min) << '\n'
      << "median=" << format_double(r.median) << '\n'
      << "max=" << format_double(r.max) << '\n';
  return out.str();
}

std::string trace_csv(const TrainTrace& t) {
  CsvBuilder csv(kTraceHeader);
  for (const TraceRecord& r : t.records) {
    csv.field(r.step)
        .field(r.train_mse)
        .field(r.val_mse)
        .field(r.gauge)
        .field(r.mean_abs_v)
        .field(r.max_abs_v)
        .field(r.mean_u)
        .field(r.param_max_abs)
        .end_row();
  }
  return csv.str();
}

std::string flow_csv(const FlowTrace& f) {
  CsvBuilder csv(kFlowHeader);
  for (std::size_t k = 0; k < f.times.size(); ++k) {
    const GaugeCoords& c = f.coords[k];
    double sum_abs_v = 0.0, max_abs_v = 0.0, sum_u = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      sum_abs_v += std::abs(c.v[i]);
      max_abs_v = std::max(max_abs_v, std::abs(c.v[i]));
      sum_u += c.u[i];
    }
    const double h = static_cast<double>(c.size());
    csv.field(f.times[k]).field(f.gauge[k]).field(sum_abs_v / h).field(max_abs_v).field(sum_u / h);
    csv.end_row();
  }
  return csv.str();
}

std::string flow_neurons_csv(const FlowTrace& f, double lambda, double eps) {
  CsvBuilder csv(kFlowNeuronsHeader);
  for (std::size_t k = 0; k < f.times.size(); ++k) {
    const GaugeCoords& c = f.coords[k];
    const DampingRates kappa = damping_rates(c, lambda, eps);
    for (std::size_t i = 0; i < c.size(); ++i) {
      csv.field(f.times[k])
          .field(i)
          .field(c.n1[i])
          .field(c.n2[i])
          .field(c.u[i])
          .field(c.v[i])
          .field(kappa.kappa[i])
          .end_row();
    }
  }
  return csv.str();
}

std::string metadata_text(const Metadata& m, const std::string& timestamp) {
  std::ostringstream out;
  for (const auto& [key, value] : m) out << key << '=' << value << '\n';
  out << "timestamp=" << timestamp << '\n';
  return out.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::filesystem::path> emit_reports(const ReportBundle& bundle,
                                                const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  auto emit = [&](const char* name, const std::string& content) {
    const auto path = out_dir / name;
    write_file(path, content);
    written.push_back(path);
  };

  if (bundle.trace) emit("trace.csv", trace_csv(*bundle.trace));
  if (bundle.flow) {
    emit("flow.csv", flow_csv(*bundle.flow));
    emit("flow_neurons.csv", flow_neurons_csv(*bundle.flow, bundle.flow_lambda, bundle.flow_eps));
  }
  if (bundle.sweep) {
    emit("sweep.csv", sweep_csv(*bundle.sweep));
    emit("sweep_runs.csv", sweep_runs_csv(*bundle.sweep));
  }
  if (bundle.stress) {
    emit("stress.csv", stress_csv(*bundle.stress));
    emit("stress_runs.csv", stress_runs_csv(*bundle.stress));
  }
  if (bundle.invariance) {
    emit("invariance.csv", invariance_csv(*bundle.invariance));
    emit("invariance_summary.txt", invariance_summary(*bundle.invariance));
  }
  emit("metadata.txt", metadata_text(bundle.metadata, bundle.timestamp));
  return written;
}

}  // namespace gaugefix
