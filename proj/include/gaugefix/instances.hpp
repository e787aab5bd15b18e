#pragma once

#include <cstddef>
#include <vector>

#include "gaugefix/network.hpp"
#include "gaugefix/rng.hpp"

namespace gaugefix {

// Random network whose per-neuron incoming and outgoing norms are drawn
// independently and log-uniformly from [norm_lo, norm_hi], with isotropic
// directions; biases ~ N(0, 0.25). Used to generate imbalanced test instances.
Params random_network(std::size_t d, std::size_t h, std::size_t m, RngStream& rng,
                      double norm_lo, double norm_hi);

// Inputs Uniform(-1, 1)^d, targets N(0, 1)^m.
Dataset random_dataset(std::size_t d, std::size_t m, std::size_t n, RngStream& rng);

// Flat-coordinate mask (same order as flatten) marking W1 row i and b1_i for
// every neuron whose preactivation lies within `margin` of zero on some sample.
std::vector<bool> kink_coordinates(const Params& p, const Dataset& data, double margin);

}  // namespace gaugefix
