#include "gaugefix/instances.hpp"

#include <cmath>

namespace gaugefix {

namespace {

void fill_direction(std::span<double> out, double norm, RngStream& rng) {
  for (double& x : out) x = rng.normal();
  const double n = l2_norm(out);
  for (double& x : out) x *= norm / n;
}

}  // namespace

Params random_network(std::size_t d, std::size_t h, std::size_t m, RngStream& rng,
                      double norm_lo, double norm_hi) {
  Params p = Params::zeros(d, h, m);
  const double log_lo = std::log(norm_lo);
  const double log_hi = std::log(norm_hi);
  for (std::size_t i = 0; i < h; ++i) {
    fill_direction(p.w1.row(i), std::exp(rng.uniform(log_lo, log_hi)), rng);
    Vector a(m);
    fill_direction(a, std::exp(rng.uniform(log_lo, log_hi)), rng);
    for (std::size_t k = 0; k < m; ++k) p.w2(k, i) = a[k];
    p.b1[i] = 0.5 * rng.normal();
  }
  for (double& b : p.b2) b = 0.5 * rng.normal();
  return p;
}

Dataset random_dataset(std::size_t d, std::size_t m, std::size_t n, RngStream& rng) {
  Dataset data;
  for (std::size_t s = 0; s < n; ++s) {
    Vector x(d);
    for (double& xj : x) xj = rng.uniform(-1.0, 1.0);
    data.x.push_back(std::move(x));
    data.y.push_back(gaussian(rng, m, 1.0));
  }
  return data;
}

std::vector<bool> kink_coordinates(const Params& p, const Dataset& data, double margin) {
  const std::size_t d = p.input_dim();
  std::vector<bool> mask(p.count(), false);
  const std::size_t b1_offset = p.w1.size();
  for (std::size_t i = 0; i < p.hidden(); ++i) {
    bool near = false;
    for (const Vector& x : data.x) {
      near = near || std::abs(dot(p.w1.row(i), x) + p.b1[i]) < margin;
    }
    if (!near) continue;
    for (std::size_t j = 0; j < d; ++j) mask[i * d + j] = true;
    mask[b1_offset + i] = true;
  }
  return mask;
}

}  // namespace gaugefix
