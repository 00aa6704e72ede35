#include "crossalarm/model.hpp"

#include <cmath>

#include "crossalarm/init.hpp"

namespace crossalarm {

void ModelConfig::validate() const {
    DswConfig dsw{T, D, L_seg, d_model};
    dsw.validate();
    if (tau == 0) throw ConfigError("ModelConfig: tau must be >= 1");
    if (heads == 0 || d_model % heads != 0)
        throw ConfigError("ModelConfig: d_model must be divisible by heads");
    if (routers == 0) throw ConfigError("ModelConfig: router count c must be >= 1");
    // c is meant to be small relative to D; a warning-level check only.
    std::size_t L = seg_count();
    for (std::size_t l = 2; l <= layers; ++l) {
        if (L < 2)
            throw ConfigError("ModelConfig: encoder layer " + std::to_string(l) +
                              " has no segment pairs left to merge (T/L_seg too small "
                              "for " + std::to_string(layers) + " layers)");
        L = (L + 1) / 2;
    }
}

namespace {

void register_msa(const std::string& prefix, MsaParams& p,
                  std::vector<std::pair<std::string, Tensor>>& out) {
    for (std::size_t h = 0; h < p.heads; ++h) {
        out.emplace_back(prefix + ".h" + std::to_string(h) + ".wq", p.w_q[h]);
        out.emplace_back(prefix + ".h" + std::to_string(h) + ".wk", p.w_k[h]);
        out.emplace_back(prefix + ".h" + std::to_string(h) + ".wv", p.w_v[h]);
    }
    out.emplace_back(prefix + ".wo", p.w_o);
}

void register_ln(const std::string& prefix, LayerNormParams& p,
                 std::vector<std::pair<std::string, Tensor>>& out) {
    out.emplace_back(prefix + ".gain", p.gain);
    out.emplace_back(prefix + ".bias", p.bias);
}

void register_mlp(const std::string& prefix, MlpParams& p,
                  std::vector<std::pair<std::string, Tensor>>& out) {
    out.emplace_back(prefix + ".w1", p.w1);
    out.emplace_back(prefix + ".b1", p.b1);
    out.emplace_back(prefix + ".w2", p.w2);
    out.emplace_back(prefix + ".b2", p.b2);
}

void register_tsa(const std::string& prefix, TsaLayer& t,
                  std::vector<std::pair<std::string, Tensor>>& out) {
    register_msa(prefix + ".time_msa", t.time_msa, out);
    register_ln(prefix + ".time_ln1", t.time_ln1, out);
    register_ln(prefix + ".time_ln2", t.time_ln2, out);
    register_mlp(prefix + ".time_mlp", t.time_mlp, out);
    out.emplace_back(prefix + ".router", t.router);
    register_msa(prefix + ".dim_agg", t.dim_agg, out);
    register_msa(prefix + ".dim_dispatch", t.dim_dispatch, out);
    register_ln(prefix + ".dim_ln1", t.dim_ln1, out);
    register_ln(prefix + ".dim_ln2", t.dim_ln2, out);
    register_mlp(prefix + ".dim_mlp", t.dim_mlp, out);
}

} // namespace

CrossformerModel::CrossformerModel(ModelConfig cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    DswConfig dsw{cfg_.T, cfg_.D, cfg_.L_seg, cfg_.d_model};
    emb_ = EmbeddingParams(dsw, rng);

    std::size_t L = cfg_.seg_count();
    encoder_.reserve(cfg_.layers);
    for (std::size_t l = 1; l <= cfg_.layers; ++l) {
        EncoderLayer layer;
        if (l > 1) {
            layer.merge = init::xavier({2 * cfg_.d_model, cfg_.d_model}, rng);
            L = (L + 1) / 2;
        }
        layer.tsa = TsaLayer(L, cfg_.d_model, cfg_.heads, cfg_.routers,
                             cfg_.mlp_hidden(), rng);
        encoder_.push_back(std::move(layer));
    }

    e_dec_ = init::gaussian({cfg_.tau_segs(), cfg_.D, cfg_.d_model}, 0.02, rng);
    decoder_.reserve(cfg_.layers + 1);
    for (std::size_t l = 0; l <= cfg_.layers; ++l) {
        DecoderLayer layer;
        layer.tsa = TsaLayer(cfg_.tau_segs(), cfg_.d_model, cfg_.heads, cfg_.routers,
                             cfg_.mlp_hidden(), rng);
        layer.cross = MsaParams(cfg_.d_model, cfg_.heads, rng);
        layer.ln1 = LayerNormParams(cfg_.d_model);
        layer.ln2 = LayerNormParams(cfg_.d_model);
        layer.mlp = MlpParams(cfg_.d_model, cfg_.mlp_hidden(), rng);
        decoder_.push_back(std::move(layer));
    }

    head_.reserve(cfg_.layers + 1);
    for (std::size_t l = 0; l <= cfg_.layers; ++l)
        head_.push_back(init::xavier({cfg_.d_model, cfg_.L_seg}, rng));

    collect_params();
}

void CrossformerModel::collect_params() {
    params_.clear();
    params_.emplace_back("emb.E", emb_.E);
    params_.emplace_back("emb.E_pos", emb_.E_pos);
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
        const std::string prefix = "enc" + std::to_string(l + 1);
        if (encoder_[l].merge) params_.emplace_back(prefix + ".merge", *encoder_[l].merge);
        register_tsa(prefix + ".tsa", encoder_[l].tsa, params_);
    }
    params_.emplace_back("e_dec", e_dec_);
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
        const std::string prefix = "dec" + std::to_string(l);
        register_tsa(prefix + ".tsa", decoder_[l].tsa, params_);
        register_msa(prefix + ".cross", decoder_[l].cross, params_);
        register_ln(prefix + ".ln1", decoder_[l].ln1, params_);
        register_ln(prefix + ".ln2", decoder_[l].ln2, params_);
        register_mlp(prefix + ".mlp", decoder_[l].mlp, params_);
    }
    for (std::size_t l = 0; l < head_.size(); ++l)
        params_.emplace_back("head.W" + std::to_string(l), head_[l]);
}

void CrossformerModel::zero_grads() {
    for (auto& [name, t] : params_) t.zero_grad();
}

std::vector<Tensor> CrossformerModel::encode(const Tensor& h) const {
    std::vector<Tensor> outputs;
    outputs.reserve(cfg_.layers + 1);
    outputs.push_back(h);
    Tensor z = h;
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
        const EncoderLayer& layer = encoder_[l];
        if (layer.merge) {
            const std::size_t L = z.extent(0), D = z.extent(1), dm = z.extent(2);
            Tensor merged = pair_concat(z);   // floor(L/2) x D x 2d
            const std::size_t half = L / 2;
            Tensor flat = reshape(merged, {half * D, 2 * dm});
            Tensor proj = reshape(matmul(flat, *layer.merge), {half, D, dm});
            if (L % 2 != 0) {
                // Odd segment count: the unpaired last segment passes through.
                Tensor last = slice(z, 0, L - 1, L);
                proj = concat({proj, last}, 0);
            }
            z = proj;
        }
        ScoreScope scope("enc" + std::to_string(l + 1), 0);
        z = tsa(z, layer.tsa);
        outputs.push_back(z);
    }
    return outputs;
}

std::vector<Tensor> CrossformerModel::decode(const std::vector<Tensor>& enc_outputs) const {
    if (enc_outputs.size() != cfg_.layers + 1)
        throw DimensionError("decode: expected " + std::to_string(cfg_.layers + 1) +
                             " encoder outputs");
    const std::size_t ts = cfg_.tau_segs(), D = cfg_.D, dm = cfg_.d_model;
    std::vector<Tensor> outputs;
    outputs.reserve(decoder_.size());
    Tensor prev = e_dec_;
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
        const DecoderLayer& layer = decoder_[l];
        const std::string prefix = "dec" + std::to_string(l);
        Tensor ztil;
        {
            ScoreScope scope(prefix, 0);
            ztil = tsa(prev, layer.tsa);
        }
        const Tensor& enc = enc_outputs[l];
        std::vector<Tensor> cols;
        cols.reserve(D);
        for (std::size_t d = 0; d < D; ++d) {
            ScoreScope scope(prefix + ".cross", d);
            Tensor qd = reshape(slice(ztil, 1, d, d + 1), {ts, dm});
            Tensor kd = reshape(slice(enc, 1, d, d + 1), {enc.extent(0), dm});
            Tensor att = msa(qd, kd, kd, layer.cross);
            cols.push_back(reshape(att, {ts, 1, dm}));
        }
        Tensor cross_all = D == 1 ? cols[0] : concat(cols, 1);
        Tensor out = residual_norm_mlp(ztil, cross_all, layer.ln1, layer.ln2, layer.mlp);
        outputs.push_back(out);
        prev = out;
    }
    return outputs;
}

Tensor CrossformerModel::project_sum(const std::vector<Tensor>& dec_outputs) const {
    const std::size_t ts = cfg_.tau_segs(), D = cfg_.D, dm = cfg_.d_model;
    Tensor total;
    for (std::size_t l = 0; l < dec_outputs.size(); ++l) {
        Tensor flat = reshape(dec_outputs[l], {ts * D, dm});
        Tensor seg = matmul(flat, head_[l]);                    // (ts*D) x L_seg
        Tensor steps = assemble_segments(seg, ts, D, cfg_.L_seg);
        total = l == 0 ? steps : add(total, steps);
    }
    if (ts * cfg_.L_seg == cfg_.tau) return total;
    return slice(total, 0, 0, cfg_.tau);   // horizon not a multiple of L_seg
}

Tensor CrossformerModel::forward(const Tensor& x) const {
    DswConfig dsw{cfg_.T, cfg_.D, cfg_.L_seg, cfg_.d_model};
    Tensor h = embed(x, dsw, emb_);
    std::vector<Tensor> enc = encode(h);
    std::vector<Tensor> dec = decode(enc);
    return project_sum(dec);
}

PredictionSeries predict_series(const CrossformerModel& model, const TimeSeriesFrame& frame) {
    const ModelConfig& cfg = model.config();
    if (frame.dims() != cfg.D)
        throw DimensionError("predict_series: frame has " + std::to_string(frame.dims()) +
                             " channels, model expects " + std::to_string(cfg.D));
    if (frame.rows() < cfg.T)
        throw DataError("predict_series: frame has " + std::to_string(frame.rows()) +
                        " rows, need at least T=" + std::to_string(cfg.T));
    if (frame.cadence_s <= 0)
        throw DataError("predict_series: frame must be resampled to a uniform cadence");

    const std::size_t lambda_max = frame.rows() - cfg.T;   // number of slide steps
    const std::size_t out_rows = lambda_max + cfg.tau;
    PredictionSeries out;
    out.T = cfg.T;
    out.tau = cfg.tau;
    out.D = cfg.D;
    out.cadence_s = frame.cadence_s;
    out.values.assign(out_rows * cfg.D, 0.0);
    out.window_of.resize(out_rows);
    out.timestamps.resize(out_rows);
    const std::int64_t t0 = frame.timestamps.front();
    const auto cad = static_cast<std::int64_t>(frame.cadence_s);
    for (std::size_t r = 0; r < out_rows; ++r) {
        out.timestamps[r] = t0 + static_cast<std::int64_t>(cfg.T + r + 1) * cad - cad;
        out.window_of[r] = r < cfg.tau ? 0 : r - cfg.tau + 1;
    }

    const std::size_t D = cfg.D;
#pragma omp parallel for schedule(dynamic)
    for (long long lam = 0; lam <= static_cast<long long>(lambda_max); ++lam) {
        std::vector<double> buf(frame.values.begin() + lam * D,
                                frame.values.begin() + (lam + cfg.T) * D);
        Tensor x = Tensor::from({cfg.T, D}, std::move(buf));
        Tensor pred = model.forward(x);
        const std::vector<double>& pv = pred.data();
        if (lam == 0) {
            std::copy(pv.begin(), pv.end(), out.values.begin());
        } else {
            const std::size_t row = cfg.tau + static_cast<std::size_t>(lam) - 1;
            std::copy(pv.end() - static_cast<std::ptrdiff_t>(D), pv.end(),
                      out.values.begin() + row * D);
        }
    }
    return out;
}

} // namespace crossalarm
