#include "gaugefix/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <sstream>

#include "gaugefix/dynamics.hpp"
#include "gaugefix/experiments.hpp"
#include "gaugefix/report.hpp"
#include "gaugefix/validation.hpp"

namespace gaugefix {

namespace {

struct Options {
  std::uint64_t seed = 0;
  std::optional<double> lr;
  std::optional<double> lambda;
  double eps = kDefaultEps;
  std::size_t steps = 5000;
  std::size_t width = 20;
  double noise_std = 0.3;
  std::size_t n_train = 256;
  std::size_t n_val = 512;
  std::string out = "out";
  std::size_t jobs = 1;
  std::size_t transforms = 200;
  std::size_t inputs = 512;
  std::size_t n_seeds = 8;
  std::vector<double> lambdas = {0.0, 0.05, 0.1, 0.2, 0.5};
  std::vector<double> lrs = {5e-3, 1e-2, 2e-2, 4e-2};
  double divergence_threshold = 1e4;
  double t_end = 5.0;
  double dt = 1e-3;
  bool include_task = false;
};

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t k = 0; k < xs.size(); ++k) s += (k ? "," : "") + format_double(xs[k]);
  return s;
}

std::string join(const std::vector<std::uint64_t>& xs) {
  std::string s;
  for (std::size_t k = 0; k < xs.size(); ++k) s += (k ? "," : "") + std::to_string(xs[k]);
  return s;
}

TrainConfig train_config(const Options& o, double default_lambda) {
  TrainConfig cfg;
  cfg.lr = o.lr.value_or(5e-3);
  cfg.lambda = o.lambda.value_or(default_lambda);
  cfg.eps = o.eps;
  cfg.steps = o.steps;
  cfg.seed = o.seed;
  cfg.divergence_threshold = o.divergence_threshold;
  return cfg;
}

DatasetConfig dataset_config(const Options& o) {
  DatasetConfig d;
  d.n_train = o.n_train;
  d.n_val = o.n_val;
  d.noise_std = o.noise_std;
  d.seed = dataset_seed(o.seed);
  return d;
}

Metadata resolved_metadata(const std::string& command, const Options& o, const TrainConfig& cfg,
                           const DatasetConfig& d) {
  Metadata m = base_metadata();
  auto add = [&m](std::string key, std::string value) {
    m.emplace_back(std::move(key), std::move(value));
  };
  add("command", command);
  add("seed", std::to_string(o.seed));
  add("lr", format_double(cfg.lr));
  add("lambda", format_double(cfg.lambda));
  add("eps", format_double(cfg.eps));
  add("steps", std::to_string(cfg.steps));
  add("width", std::to_string(o.width));
  add("divergence_threshold", format_double(cfg.divergence_threshold));
  add("marginal_window_frac", format_double(cfg.marginal_window_frac));
  add("marginal_amplitude", format_double(cfg.marginal_amplitude));
  add("n_train", std::to_string(d.n_train));
  add("n_val", std::to_string(d.n_val));
  add("train_interval", format_double(d.train_lo) + "," + format_double(d.train_hi));
  add("val_interval", format_double(d.val_lo) + "," + format_double(d.val_hi));
  add("noise_std", format_double(d.noise_std));
  add("jobs", std::to_string(o.jobs));
  return m;
}

int run_command(const std::string& command, const Options& o, std::ostream& out) {
  const std::filesystem::path out_dir = o.out;
  ReportBundle bundle;
  bundle.timestamp = utc_timestamp();
  const ExperimentOptions xopt{o.width, o.jobs};
  const DatasetConfig dcfg = dataset_config(o);

  if (command == "validate") {
    const std::vector<CheckResult> checks = run_validation(out);
    std::size_t passed = 0;
    for (const CheckResult& c : checks) passed += c.passed ? 1 : 0;
    out << passed << "/" << checks.size() << " checks passed\n";
    return passed == checks.size() ? 0 : 1;
  }

  if (command == "train") {
    const TrainConfig cfg = train_config(o, 0.0);
    TrainTrace trace = train_seeded(o.seed, cfg, dcfg, o.width);
    const RunSummary s = summarize(o.seed, cfg, trace);
    bundle.metadata = resolved_metadata(command, o, cfg, dcfg);
    bundle.metadata.emplace_back("label", std::string(to_string(trace.label.kind)));
    bundle.trace = std::move(trace);
    emit_reports(bundle, out_dir);
    out << "train seed=" << o.seed << " lr=" << format_double(cfg.lr)
        << " lambda=" << format_double(cfg.lambda) << " train_mse=" << format_double(s.train_mse)
        << " val_mse=" << format_double(s.val_mse) << " drift_v=" << format_double(s.drift_v)
        << " label=" << to_string(s.label.kind) << '\n';
    return 0;
  }

  if (command == "flow") {
    const TrainConfig cfg = train_config(o, 0.2);
    const SeededRun run = prepare_run(o.seed, dcfg, o.width);
    FlowConfig fcfg;
    fcfg.lambda = cfg.lambda;
    fcfg.eps = cfg.eps;
    fcfg.t_end = o.t_end;
    fcfg.dt = o.dt;
    fcfg.include_task = o.include_task;
    FlowTrace flow = integrate_gauge_flow(run.init, fcfg, &run.data.train);
    bundle.metadata = resolved_metadata(command, o, cfg, dcfg);
    bundle.metadata.emplace_back("t_end", format_double(o.t_end));
    bundle.metadata.emplace_back("dt", format_double(o.dt));
    bundle.metadata.emplace_back("include_task", o.include_task ? "true" : "false");
    bundle.metadata.emplace_back("integrator", "classical RK4, fixed step");
    bundle.metadata.emplace_back("truncated", flow.truncated ? "true" : "false");
    bundle.flow_lambda = fcfg.lambda;
    bundle.flow_eps = fcfg.eps;
    out << "flow lambda=" << format_double(fcfg.lambda) << " t_end=" << format_double(o.t_end)
        << " G0=" << format_double(flow.gauge.front())
        << " G_end=" << format_double(flow.gauge.back())
        << (flow.truncated ? " truncated" : "") << '\n';
    bundle.flow = std::move(flow);
    emit_reports(bundle, out_dir);
    return 0;
  }

  const std::vector<std::uint64_t> seeds = seed_list(o.seed, o.n_seeds);

  if (command == "sweep-lambda") {
    const TrainConfig cfg = train_config(o, 0.0);
    SweepResult sweep = lambda_sweep(o.lambdas, seeds, cfg, dcfg, xopt);
    bundle.metadata = resolved_metadata(command, o, cfg, dcfg);
    bundle.metadata.emplace_back("lambdas", join(o.lambdas));
    bundle.metadata.emplace_back("seeds", join(seeds));
    for (const SweepRow& row : sweep.rows) {
      out << "lambda=" << format_double(row.lambda)
          << " val_mse=" << format_double(row.val_mse_mean) << "+-"
          << format_double(row.val_mse_std) << " drift_v=" << format_double(row.drift_v_mean)
          << '\n';
    }
    bundle.sweep = std::move(sweep);
    emit_reports(bundle, out_dir);
    return 0;
  }

  if (command == "lr-stress") {
    const TrainConfig cfg = train_config(o, 0.2);
    StressResult stress = lr_stress(o.lrs, cfg.lambda, seeds, cfg, dcfg, xopt);
    bundle.metadata = resolved_metadata(command, o, cfg, dcfg);
    bundle.metadata.emplace_back("lrs", join(o.lrs));
    bundle.metadata.emplace_back("seeds", join(seeds));
    for (const StressRow& row : stress.rows) {
      out << row.method << " lr=" << format_double(row.lr)
          << " val_mse=" << format_double(row.val_mse_mean) << " label=" << to_string(row.aggregate)
          << '\n';
    }
    bundle.stress = std::move(stress);
    emit_reports(bundle, out_dir);
    return 0;
  }

  if (command == "invariance") {
    const TrainConfig cfg = train_config(o, 0.0);
    const TrainTrace trace = train_seeded(o.seed, cfg, dcfg, o.width);
    InvarianceResult inv =
        invariance_experiment(trace.final_params, o.transforms, o.inputs, derive_seed(o.seed, 2));
    bundle.metadata = resolved_metadata(command, o, cfg, dcfg);
    bundle.metadata.emplace_back("transforms", std::to_string(o.transforms));
    bundle.metadata.emplace_back("inputs", std::to_string(o.inputs));
    bundle.metadata.emplace_back("scale_distribution", "s_i = exp(Uniform(-1,1))");
    out << "invariance transforms=" << o.transforms << " min=" << format_double(inv.min)
        << " median=" << format_double(inv.median) << " max=" << format_double(inv.max) << '\n';
    bundle.invariance = std::move(inv);
    emit_reports(bundle, out_dir);
    return 0;
  }

  throw std::logic_error("unhandled command " + command);
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gauge symmetry and soft gauge fixing for one-hidden-layer ReLU networks",
               "gaugefix"};
  app.require_subcommand(1, 1);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "Flat key=value file; flags override file values");

  Options o;
  app.add_option("--seed", o.seed, "Run seed (master seed for multi-seed experiments)");
  app.add_option("--lr", o.lr, "Learning rate (default 5e-3)");
  app.add_option("--lambda", o.lambda,
                 "Gauge-fixing strength (default 0; 0.2 for lr-stress and flow)");
  app.add_option("--eps", o.eps, "Norm regularizer epsilon")->check(CLI::PositiveNumber);
  app.add_option("--steps", o.steps, "Gradient-descent steps");
  app.add_option("--width", o.width, "Hidden width H")->check(CLI::PositiveNumber);
  app.add_option("--noise-std", o.noise_std, "Training label noise std")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--n-train", o.n_train, "Training samples")->check(CLI::PositiveNumber);
  app.add_option("--n-val", o.n_val, "Validation grid points")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--jobs", o.jobs, "Parallel runs")->check(CLI::PositiveNumber);
  app.add_option("--transforms", o.transforms, "Random gauge transforms")
      ->check(CLI::PositiveNumber);
  app.add_option("--inputs", o.inputs, "Inputs for the invariance error")
      ->check(CLI::PositiveNumber);
  app.add_option("--n-seeds", o.n_seeds, "Seeds per configuration")->check(CLI::PositiveNumber);
  app.add_option("--lambdas", o.lambdas, "Comma-separated lambda values")->delimiter(',');
  app.add_option("--lrs", o.lrs, "Comma-separated learning rates")->delimiter(',');
  app.add_option("--divergence-threshold", o.divergence_threshold,
                 "Unstable once train loss exceeds this multiple of its initial value");
  app.add_option("--t-end", o.t_end, "Flow integration horizon")->check(CLI::PositiveNumber);
  app.add_option("--dt", o.dt, "RK4 step")->check(CLI::PositiveNumber);
  app.add_flag("--include-task", o.include_task, "Include the task gradient in the flow");

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"train", "Single training run; writes trace.csv"},
      {"flow", "RK4 integration of the gradient flow; writes flow.csv"},
      {"sweep-lambda", "Lambda sweep over seeds; writes sweep.csv"},
      {"lr-stress", "Learning-rate stress test; writes stress.csv"},
      {"invariance", "Random gauge transforms of a trained net; writes invariance.csv"},
      {"validate", "Run the built-in invariant checks"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  std::vector<const char*> cargs;
  for (const std::string& a : argv) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run_command(command, o, out);
  } catch (const std::exception& e) {
    err << "gaugefix " << command << ": error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gaugefix
