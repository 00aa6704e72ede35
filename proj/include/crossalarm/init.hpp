#pragma once

#include <random>

#include "crossalarm/tensor.hpp"

namespace crossalarm::init {

// Xavier-style normal init, std = sqrt(2 / (fan_in + fan_out)) from the two
// trailing extents. Draw order is fixed, so a seed pins every weight.
Tensor xavier(Shape shape, std::mt19937_64& rng);

Tensor gaussian(Shape shape, double stddev, std::mt19937_64& rng);

Tensor zeros_param(Shape shape);
Tensor ones_param(Shape shape);

} // namespace crossalarm::init
