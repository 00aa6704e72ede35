#pragma once

#include <cstdint>
#include <random>

#include "crossalarm/tensor.hpp"

// Dimension-segment-wise embedding: every length-L_seg slice of a single
// channel becomes one d_model token, plus a learnable per-(segment, channel)
// position embedding.

namespace crossalarm {

struct DswConfig {
    std::size_t T = 96;
    std::size_t D = 10;
    std::size_t L_seg = 12;
    std::size_t d_model = 64;

    std::size_t seg_count() const { return T / L_seg; }
    void validate() const;
};

struct EmbeddingParams {
    // Projection stored row-vector style: token = segment_row * E + E_pos.
    Tensor E;      // L_seg x d_model
    Tensor E_pos;  // seg_count x D x d_model

    EmbeddingParams() = default;
    EmbeddingParams(const DswConfig& cfg, std::mt19937_64& rng);
};

// segment+project: X (T x D) -> H (seg_count x D x d_model)
Tensor embed(const Tensor& x, const DswConfig& cfg, const EmbeddingParams& params);

} // namespace crossalarm
