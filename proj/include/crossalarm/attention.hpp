#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "crossalarm/tensor.hpp"

// Two-stage attention: canonical multi-head self-attention applied per
// dimension across time, then a router mechanism across dimensions. The
// router stage aggregates all dimensions into c router slots and dispatches
// back, so its score cost grows linearly in D instead of quadratically.

namespace crossalarm {

struct MsaParams {
    std::size_t d_model = 0;
    std::size_t heads = 0;
    std::vector<Tensor> w_q, w_k, w_v;  // per head, d_model x d_head
    Tensor w_o;                         // d_model x d_model

    MsaParams() = default;
    MsaParams(std::size_t d_model, std::size_t heads, std::mt19937_64& rng);
    std::size_t d_head() const { return d_model / heads; }
};

struct LayerNormParams {
    Tensor gain, bias;
    LayerNormParams() = default;
    explicit LayerNormParams(std::size_t width);
};

struct MlpParams {
    Tensor w1, b1, w2, b2;
    MlpParams() = default;
    MlpParams(std::size_t width, std::size_t hidden, std::mt19937_64& rng);
};

// Position-wise feedforward with a smooth nonlinearity (GELU).
Tensor mlp_forward(const Tensor& x2d, const MlpParams& p);

// Post-norm sublayer wrapper: LayerNorm(x + sub), then LayerNorm(. + MLP(.)),
// both over the trailing d_model axis.
Tensor residual_norm_mlp(const Tensor& x, const Tensor& sublayer_out,
                         const LayerNormParams& ln1, const LayerNormParams& ln2,
                         const MlpParams& mlp);

// Scaled dot-product multi-head attention. q: Q x d_model, k/v: K x d_model.
Tensor msa(const Tensor& q, const Tensor& k, const Tensor& v, const MsaParams& p);

struct TsaLayer {
    std::size_t seg_count = 0;   // L at this scale
    std::size_t d_model = 0;
    std::size_t routers = 0;     // c

    MsaParams time_msa;
    LayerNormParams time_ln1, time_ln2;
    MlpParams time_mlp;

    Tensor router;               // seg_count x c x d_model
    MsaParams dim_agg, dim_dispatch;
    LayerNormParams dim_ln1, dim_ln2;
    MlpParams dim_mlp;

    TsaLayer() = default;
    TsaLayer(std::size_t seg_count, std::size_t d_model, std::size_t heads,
             std::size_t routers, std::size_t mlp_hidden, std::mt19937_64& rng);
};

// Per-dimension MSA over time, each dimension independent. L x D x d -> same.
Tensor cross_time_stage(const Tensor& z, const TsaLayer& layer);
// Router attention per time step, each step independent. L x D x d -> same.
Tensor cross_dimension_stage(const Tensor& z_time, const TsaLayer& layer);
// Reference: direct all-pairs self-attention across dimensions (reuses the
// dispatch projections). Kept for complexity comparison in tests and bench.
Tensor cross_dimension_stage_allpairs(const Tensor& z_time, const TsaLayer& layer);

Tensor tsa(const Tensor& z, const TsaLayer& layer);

// ---- attention score instrumentation ---------------------------------------

// Running count of attention score entries (query rows x key rows, per head)
// computed by msa(). Used by the complexity property tests.
std::uint64_t score_entry_count();
void reset_score_entry_count();

// Optional per-thread export hook: receives every post-softmax score matrix
// with its layer/stage path, head and slice (dimension or time-step) index.
struct ScoreRecord {
    std::string path;      // e.g. "enc1.time"
    std::size_t head;
    std::size_t slice;     // dimension d for time stage, step i for dim stage
    std::size_t rows, cols;
    const double* scores;  // row-major, rows sum to 1
};
using ScoreSink = std::function<void(const ScoreRecord&)>;

void set_score_sink(ScoreSink* sink);   // nullptr to disable

// RAII label for the (path, slice) the next msa() calls belong to. The TSA
// stages extend the current path with ".time" / ".dim_agg" / ".dim_dispatch",
// so callers label just the layer (e.g. "enc1") around a tsa() call.
class ScoreScope {
public:
    ScoreScope(std::string path, std::size_t slice);
    ~ScoreScope();

private:
    std::string prev_path_;
    std::size_t prev_slice_;
};

std::string current_score_path();

} // namespace crossalarm
