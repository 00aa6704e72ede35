#include "crossalarm/attention.hpp"

#include <atomic>
#include <cmath>

#include "crossalarm/init.hpp"

namespace crossalarm {

namespace {

std::atomic<std::uint64_t> g_score_entries{0};

thread_local ScoreSink* t_sink = nullptr;
thread_local std::string t_path;
thread_local std::size_t t_slice = 0;

} // namespace

std::uint64_t score_entry_count() { return g_score_entries.load(std::memory_order_relaxed); }
void reset_score_entry_count() { g_score_entries.store(0, std::memory_order_relaxed); }

void set_score_sink(ScoreSink* sink) { t_sink = sink; }

ScoreScope::ScoreScope(std::string path, std::size_t slice)
    : prev_path_(std::move(t_path)), prev_slice_(t_slice) {
    t_path = std::move(path);
    t_slice = slice;
}

ScoreScope::~ScoreScope() {
    t_path = std::move(prev_path_);
    t_slice = prev_slice_;
}

std::string current_score_path() { return t_path; }

MsaParams::MsaParams(std::size_t d_model_, std::size_t heads_, std::mt19937_64& rng)
    : d_model(d_model_), heads(heads_) {
    if (heads == 0 || d_model % heads != 0)
        throw ConfigError("MsaParams: d_model=" + std::to_string(d_model) +
                          " must be divisible by heads=" + std::to_string(heads));
    const std::size_t dh = d_model / heads;
    w_q.reserve(heads);
    w_k.reserve(heads);
    w_v.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        w_q.push_back(init::xavier({d_model, dh}, rng));
        w_k.push_back(init::xavier({d_model, dh}, rng));
        w_v.push_back(init::xavier({d_model, dh}, rng));
    }
    w_o = init::xavier({d_model, d_model}, rng);
}

LayerNormParams::LayerNormParams(std::size_t width)
    : gain(init::ones_param({width})), bias(init::zeros_param({width})) {}

MlpParams::MlpParams(std::size_t width, std::size_t hidden, std::mt19937_64& rng)
    : w1(init::xavier({width, hidden}, rng)),
      b1(init::zeros_param({hidden})),
      w2(init::xavier({hidden, width}, rng)),
      b2(init::zeros_param({width})) {}

Tensor mlp_forward(const Tensor& x2d, const MlpParams& p) {
    Tensor h = gelu(add(matmul(x2d, p.w1), p.b1));
    return add(matmul(h, p.w2), p.b2);
}

Tensor msa(const Tensor& q, const Tensor& k, const Tensor& v, const MsaParams& p) {
    if (q.ndim() != 2 || k.ndim() != 2 || v.ndim() != 2)
        throw DimensionError("msa: expects 2-D q/k/v");
    if (k.extent(0) != v.extent(0))
        throw DimensionError("msa: key rows " + std::to_string(k.extent(0)) +
                             " != value rows " + std::to_string(v.extent(0)));
    if (q.extent(1) != p.d_model || k.extent(1) != p.d_model || v.extent(1) != p.d_model)
        throw DimensionError("msa: operand width must equal d_model=" +
                             std::to_string(p.d_model));
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(p.d_head()));
    std::vector<Tensor> heads;
    heads.reserve(p.heads);
    for (std::size_t h = 0; h < p.heads; ++h) {
        Tensor qh = matmul(q, p.w_q[h]);
        Tensor kh = matmul(k, p.w_k[h]);
        Tensor vh = matmul(v, p.w_v[h]);
        Tensor scores = softmax(scale(matmul(qh, transpose(kh)), inv_scale), 1);
        g_score_entries.fetch_add(
            static_cast<std::uint64_t>(q.extent(0)) * k.extent(0),
            std::memory_order_relaxed);
        if (t_sink && *t_sink) {
            ScoreRecord rec{t_path, h, t_slice, scores.extent(0), scores.extent(1),
                            scores.data().data()};
            (*t_sink)(rec);
        }
        heads.push_back(matmul(scores, vh));
    }
    Tensor cat = p.heads == 1 ? heads[0] : concat(heads, 1);
    return matmul(cat, p.w_o);
}

TsaLayer::TsaLayer(std::size_t seg_count_, std::size_t d_model_, std::size_t heads,
                   std::size_t routers_, std::size_t mlp_hidden, std::mt19937_64& rng)
    : seg_count(seg_count_), d_model(d_model_), routers(routers_) {
    if (routers == 0) throw ConfigError("TsaLayer: router count c must be >= 1");
    time_msa = MsaParams(d_model, heads, rng);
    time_ln1 = LayerNormParams(d_model);
    time_ln2 = LayerNormParams(d_model);
    time_mlp = MlpParams(d_model, mlp_hidden, rng);
    router = init::gaussian({seg_count, routers, d_model}, 0.02, rng);
    dim_agg = MsaParams(d_model, heads, rng);
    dim_dispatch = MsaParams(d_model, heads, rng);
    dim_ln1 = LayerNormParams(d_model);
    dim_ln2 = LayerNormParams(d_model);
    dim_mlp = MlpParams(d_model, mlp_hidden, rng);
}

namespace {

void check_tsa_input(const Tensor& z, const TsaLayer& layer, const char* stage) {
    if (z.ndim() != 3)
        throw DimensionError(std::string(stage) + ": expects L x D x d_model input, got " +
                             shape_str(z.shape()));
    if (z.extent(0) != layer.seg_count)
        throw DimensionError(std::string(stage) + ": segment count " +
                             std::to_string(z.extent(0)) + " != layer seg_count " +
                             std::to_string(layer.seg_count));
    if (z.extent(2) != layer.d_model)
        throw DimensionError(std::string(stage) + ": model width mismatch");
}

} // namespace

Tensor residual_norm_mlp(const Tensor& x, const Tensor& sublayer_out,
                         const LayerNormParams& ln1, const LayerNormParams& ln2,
                         const MlpParams& mlp) {
    const Shape s = x.shape();
    Tensor a = layer_norm(add(x, sublayer_out), ln1.gain, ln1.bias, s.size() - 1);
    std::size_t rows = 1;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) rows *= s[i];
    Tensor flat = reshape(a, {rows, s.back()});
    Tensor m = mlp_forward(flat, mlp);
    Tensor b = layer_norm(add(flat, m), ln2.gain, ln2.bias, 1);
    return reshape(b, s);
}

Tensor cross_time_stage(const Tensor& z, const TsaLayer& layer) {
    check_tsa_input(z, layer, "cross_time_stage");
    const std::size_t L = z.extent(0), D = z.extent(1), dm = z.extent(2);
    const std::string base = t_path;
    std::vector<Tensor> cols;
    cols.reserve(D);
    for (std::size_t d = 0; d < D; ++d) {
        ScoreScope scope(base + ".time", d);
        Tensor zd = reshape(slice(z, 1, d, d + 1), {L, dm});
        Tensor att = msa(zd, zd, zd, layer.time_msa);
        cols.push_back(reshape(att, {L, 1, dm}));
    }
    Tensor att_all = D == 1 ? cols[0] : concat(cols, 1);
    return residual_norm_mlp(z, att_all, layer.time_ln1, layer.time_ln2, layer.time_mlp);
}

Tensor cross_dimension_stage(const Tensor& z_time, const TsaLayer& layer) {
    check_tsa_input(z_time, layer, "cross_dimension_stage");
    const std::size_t L = z_time.extent(0), D = z_time.extent(1), dm = z_time.extent(2);
    const std::string base = t_path;
    std::vector<Tensor> steps;
    steps.reserve(L);
    for (std::size_t i = 0; i < L; ++i) {
        Tensor zi = reshape(slice(z_time, 0, i, i + 1), {D, dm});
        Tensor ri = reshape(slice(layer.router, 0, i, i + 1), {layer.routers, dm});
        Tensor gathered, dispatched;
        {
            ScoreScope scope(base + ".dim_agg", i);
            gathered = msa(ri, zi, zi, layer.dim_agg);           // c x d_model
        }
        {
            ScoreScope scope(base + ".dim_dispatch", i);
            dispatched = msa(zi, gathered, gathered, layer.dim_dispatch);  // D x d_model
        }
        steps.push_back(reshape(dispatched, {1, D, dm}));
    }
    Tensor att_all = L == 1 ? steps[0] : concat(steps, 0);
    return residual_norm_mlp(z_time, att_all, layer.dim_ln1, layer.dim_ln2, layer.dim_mlp);
}

Tensor cross_dimension_stage_allpairs(const Tensor& z_time, const TsaLayer& layer) {
    check_tsa_input(z_time, layer, "cross_dimension_stage_allpairs");
    const std::size_t L = z_time.extent(0), D = z_time.extent(1), dm = z_time.extent(2);
    const std::string base = t_path;
    std::vector<Tensor> steps;
    steps.reserve(L);
    for (std::size_t i = 0; i < L; ++i) {
        ScoreScope scope(base + ".dim_allpairs", i);
        Tensor zi = reshape(slice(z_time, 0, i, i + 1), {D, dm});
        Tensor att = msa(zi, zi, zi, layer.dim_dispatch);        // D x D scores
        steps.push_back(reshape(att, {1, D, dm}));
    }
    Tensor att_all = L == 1 ? steps[0] : concat(steps, 0);
    return residual_norm_mlp(z_time, att_all, layer.dim_ln1, layer.dim_ln2, layer.dim_mlp);
}

Tensor tsa(const Tensor& z, const TsaLayer& layer) {
    return cross_dimension_stage(cross_time_stage(z, layer), layer);
}

} // namespace crossalarm
