#include "gaugefix/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gaugefix {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_data_matches(const Params& p, const Dataset& data) {
  data.check();
  require(data.x.front().size() == p.input_dim(),
          "dataset input dimension " + std::to_string(data.x.front().size()) +
              " does not match network input dimension " + std::to_string(p.input_dim()));
  require(data.y.front().size() == p.output_dim(),
          "dataset target dimension " + std::to_string(data.y.front().size()) +
              " does not match network output dimension " + std::to_string(p.output_dim()));
}

void append(std::vector<double>& out, std::span<const double> block) {
  out.insert(out.end(), block.begin(), block.end());
}

template <typename Blocks>
std::vector<double> flatten_blocks(const Blocks& b) {
  std::vector<double> out;
  out.reserve(b.w1.size() + b.b1.size() + b.w2.size() + b.b2.size());
  append(out, b.w1.data());
  append(out, b.b1);
  append(out, b.w2.data());
  append(out, b.b2);
  return out;
}

void axpy_span(std::span<double> y, double scale, std::span<const double> x) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += scale * x[k];
}

}  // namespace

Params Params::zeros(std::size_t d, std::size_t h, std::size_t m) {
  return Params{Matrix(h, d), Vector(h, 0.0), Matrix(m, h), Vector(m, 0.0)};
}

void Params::check_shapes() const {
  require(w1.rows() == b1.size(), "Params: W1 rows must equal len(b1)");
  require(w2.cols() == w1.rows(), "Params: W2 cols must equal W1 rows");
  require(w2.rows() == b2.size(), "Params: W2 rows must equal len(b2)");
}

std::size_t Params::count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

Grads Grads::zeros_like(const Params& p) {
  return Grads{Matrix(p.w1.rows(), p.w1.cols()), Vector(p.b1.size(), 0.0),
               Matrix(p.w2.rows(), p.w2.cols()), Vector(p.b2.size(), 0.0)};
}

std::vector<double> flatten(const Params& p) { return flatten_blocks(p); }
std::vector<double> flatten(const Grads& g) { return flatten_blocks(g); }

Params unflatten(const Params& shape, std::span<const double> flat) {
  require(flat.size() == shape.count(), "unflatten: flat length does not match parameter count");
  Params out = shape;
  auto take = [&flat](std::span<double> dst) {
    std::copy_n(flat.begin(), dst.size(), dst.begin());
    flat = flat.subspan(dst.size());
  };
  take(out.w1.data());
  take(out.b1);
  take(out.w2.data());
  take(out.b2);
  return out;
}

Params axpy(const Params& p, double scale, const Grads& g) {
  Params out = p;
  axpy_span(out.w1.data(), scale, g.w1.data());
  axpy_span(out.b1, scale, g.b1);
  axpy_span(out.w2.data(), scale, g.w2.data());
  axpy_span(out.b2, scale, g.b2);
  return out;
}

Grads add_scaled(const Grads& a, double scale, const Grads& b) {
  Grads out = a;
  axpy_span(out.w1.data(), scale, b.w1.data());
  axpy_span(out.b1, scale, b.b1);
  axpy_span(out.w2.data(), scale, b.w2.data());
  axpy_span(out.b2, scale, b.b2);
  return out;
}

double max_abs(const Params& p) {
  const double blocks[] = {max_abs(p.w1.data()), max_abs(p.b1), max_abs(p.w2.data()),
                           max_abs(p.b2)};
  double best = 0.0;
  for (double b : blocks) {
    if (std::isnan(b)) return b;
    best = std::max(best, b);
  }
  return best;
}

bool all_finite(const Params& p) {
  return all_finite(p.w1.data()) && all_finite(p.b1) && all_finite(p.w2.data()) &&
         all_finite(p.b2);
}

bool all_finite(const Grads& g) {
  return all_finite(g.w1.data()) && all_finite(g.b1) && all_finite(g.w2.data()) &&
         all_finite(g.b2);
}

void Dataset::check() const {
  require(!x.empty(), "Dataset: empty");
  require(x.size() == y.size(), "Dataset: |X| != |Y|");
  const std::size_t d = x.front().size();
  const std::size_t m = y.front().size();
  for (std::size_t n = 0; n < x.size(); ++n) {
    require(x[n].size() == d && y[n].size() == m, "Dataset: non-uniform sample dimensions");
  }
}

Params init_params(std::size_t d, std::size_t h, std::size_t m, RngStream& rng) {
  require(d >= 1 && h >= 1 && m >= 1, "init_params: dimensions must be >= 1");
  Params p = Params::zeros(d, h, m);
  const double std1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double std2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (double& w : p.w1.data()) w = std1 * rng.normal();
  for (double& w : p.w2.data()) w = std2 * rng.normal();
  return p;
}

Vector forward(const Params& p, std::span<const double> x) {
  Vector hidden = matvec(p.w1, x);
  for (std::size_t i = 0; i < hidden.size(); ++i) hidden[i] = relu(hidden[i] + p.b1[i]);
  Vector out = matvec(p.w2, hidden);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += p.b2[k];
  return out;
}

double mse_loss(const Params& p, const Dataset& data) {
  check_data_matches(p, data);
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Vector f = forward(p, data.x[n]);
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double r = f[k] - data.y[n][k];
      total += r * r;
    }
  }
  return total / static_cast<double>(data.size());
}

LossAndGrads task_loss_and_gradients(const Params& p, const Dataset& data) {
  check_data_matches(p, data);
  const std::size_t h = p.hidden();
  const std::size_t m = p.output_dim();
  const double inv_n = 1.0 / static_cast<double>(data.size());

  LossAndGrads out{0.0, Grads::zeros_like(p)};
  Grads& g = out.grads;
  Vector pre(h);
  Vector act(h);
  Vector resid(m);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Vector& x = data.x[n];
    for (std::size_t i = 0; i < h; ++i) {
      pre[i] = dot(p.w1.row(i), x) + p.b1[i];
      act[i] = relu(pre[i]);
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double f = dot(p.w2.row(k), act) + p.b2[k];
      const double r = f - data.y[n][k];
      out.loss += r * r;
      // dL/df_k for the mean over samples.
      resid[k] = 2.0 * r * inv_n;
    }
    for (std::size_t k = 0; k < m; ++k) {
      g.b2[k] += resid[k];
      for (std::size_t i = 0; i < h; ++i) g.w2(k, i) += resid[k] * act[i];
    }
    for (std::size_t i = 0; i < h; ++i) {
      if (!(pre[i] > 0.0)) continue;
      double upstream = 0.0;
      for (std::size_t k = 0; k < m; ++k) upstream += p.w2(k, i) * resid[k];
      g.b1[i] += upstream;
      auto row = g.w1.row(i);
      for (std::size_t j = 0; j < x.size(); ++j) row[j] += upstream * x[j];
    }
  }
  out.loss /= static_cast<double>(data.size());
  return out;
}

Grads task_gradients(const Params& p, const Dataset& data) {
  return task_loss_and_gradients(p, data).grads;
}

}  // namespace gaugefix
