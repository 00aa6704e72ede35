#include "crossalarm/init.hpp"

#include <cmath>

namespace crossalarm::init {

Tensor xavier(Shape shape, std::mt19937_64& rng) {
    const std::size_t rank = shape.size();
    const std::size_t fan_in = rank >= 2 ? shape[rank - 2] : shape.back();
    const std::size_t fan_out = shape.back();
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    return gaussian(std::move(shape), stddev, rng);
}

Tensor gaussian(Shape shape, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = dist(rng);
    return Tensor::param(std::move(shape), std::move(data));
}

Tensor zeros_param(Shape shape) {
    std::vector<double> data(shape_numel(shape), 0.0);
    return Tensor::param(std::move(shape), std::move(data));
}

Tensor ones_param(Shape shape) {
    std::vector<double> data(shape_numel(shape), 1.0);
    return Tensor::param(std::move(shape), std::move(data));
}

} // namespace crossalarm::init
