#include "crossalarm/embedding.hpp"

#include <cmath>

#include "crossalarm/init.hpp"

namespace crossalarm {

void DswConfig::validate() const {
    if (L_seg == 0 || d_model == 0 || D == 0)
        throw ConfigError("DswConfig: L_seg, d_model and D must be positive");
    if (T == 0 || T % L_seg != 0)
        throw ConfigError("DswConfig: T=" + std::to_string(T) + " must be a positive multiple of L_seg=" +
                          std::to_string(L_seg) + "; pad the window or change T");
}

EmbeddingParams::EmbeddingParams(const DswConfig& cfg, std::mt19937_64& rng) {
    E = init::xavier({cfg.L_seg, cfg.d_model}, rng);
    E_pos = init::gaussian({cfg.seg_count(), cfg.D, cfg.d_model}, 0.02, rng);
}

Tensor embed(const Tensor& x, const DswConfig& cfg, const EmbeddingParams& params) {
    if (x.ndim() != 2 || x.extent(0) != cfg.T || x.extent(1) != cfg.D)
        throw DimensionError("embed: expected input " + std::to_string(cfg.T) + "x" +
                             std::to_string(cfg.D) + ", got " + shape_str(x.shape()));
    const std::size_t n_seg = cfg.seg_count();
    Tensor segs = segment_series(x, cfg.L_seg);                    // n_seg x D x L_seg
    Tensor flat = reshape(segs, {n_seg * cfg.D, cfg.L_seg});
    Tensor proj = matmul(flat, params.E);                          // (n_seg*D) x d_model
    Tensor h = reshape(proj, {n_seg, cfg.D, cfg.d_model});
    return add(h, params.E_pos);
}

} // namespace crossalarm
