#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "crossalarm/attention.hpp"
#include "crossalarm/data.hpp"
#include "crossalarm/embedding.hpp"

// The full forecaster: DSW embedding, hierarchical encoder with pairwise
// segment merging, per-scale decoder with cross attention, and a layer-summed
// prediction head. Inference over a frame slides a stride-1 window and keeps
// each window's newest step.

namespace crossalarm {

struct ModelConfig {
    std::size_t T = 96;
    std::size_t tau = 12;
    std::size_t L_seg = 12;
    std::size_t d_model = 64;
    std::size_t heads = 4;
    std::size_t layers = 3;    // encoder depth N; decoder has N+1 layers
    std::size_t routers = 3;   // c
    std::size_t D = 10;
    std::size_t mlp_hidden_mult = 4;

    std::size_t seg_count() const { return T / L_seg; }
    std::size_t tau_segs() const { return (tau + L_seg - 1) / L_seg; }
    std::size_t mlp_hidden() const { return mlp_hidden_mult * d_model; }
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct EncoderLayer {
    std::optional<Tensor> merge;   // 2*d_model x d_model, absent on layer 1
    TsaLayer tsa;
};

struct DecoderLayer {
    TsaLayer tsa;
    MsaParams cross;
    LayerNormParams ln1, ln2;
    MlpParams mlp;
};

class CrossformerModel {
public:
    CrossformerModel(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }

    // x: T x D (normalized). Returns tau x D. Pure given parameters.
    Tensor forward(const Tensor& x) const;

    // Encoder scale outputs [H, Z1, ..., ZN]; exposed for tests and the
    // attention export path.
    std::vector<Tensor> encode(const Tensor& h) const;
    std::vector<Tensor> decode(const std::vector<Tensor>& enc_outputs) const;
    Tensor project_sum(const std::vector<Tensor>& dec_outputs) const;

    std::vector<std::pair<std::string, Tensor>>& named_params() { return params_; }
    const std::vector<std::pair<std::string, Tensor>>& named_params() const { return params_; }
    void zero_grads();

    EmbeddingParams& embedding() { return emb_; }

private:
    void collect_params();

    ModelConfig cfg_;
    std::uint64_t seed_ = 0;
    EmbeddingParams emb_;
    std::vector<EncoderLayer> encoder_;
    Tensor e_dec_;                      // tau_segs x D x d_model
    std::vector<DecoderLayer> decoder_;
    std::vector<Tensor> head_;          // per layer, d_model x L_seg
    std::vector<std::pair<std::string, Tensor>> params_;
};

// Stride-1 sliding-window prediction over a whole frame (Eq.-10-style
// assembly): rows 1..tau come from window 0, then each subsequent window
// contributes its newest step. Values stay in the model's normalized space.
struct PredictionSeries {
    std::vector<std::int64_t> timestamps;   // instants T+1 .. T+Lambda+tau
    std::vector<double> values;             // (Lambda+tau) x D, row-major
    std::vector<std::size_t> window_of;     // producing window per row
    std::size_t T = 0, tau = 0, D = 0;
    double cadence_s = 0;

    std::size_t rows() const { return window_of.size(); }
    double at(std::size_t r, std::size_t d) const { return values[r * D + d]; }
};

PredictionSeries predict_series(const CrossformerModel& model, const TimeSeriesFrame& frame);

} // namespace crossalarm
