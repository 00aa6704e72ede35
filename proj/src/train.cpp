#include "crossalarm/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace crossalarm {

double mse(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size())
        throw DimensionError("mse: length mismatch " + std::to_string(y.size()) + " vs " +
                             std::to_string(y_hat.size()));
    if (y.empty()) throw UsageError("mse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - y_hat[i];
        acc += d * d;
    }
    return acc / static_cast<double>(y.size());
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size())
        throw DimensionError("mae: length mismatch " + std::to_string(y.size()) + " vs " +
                             std::to_string(y_hat.size()));
    if (y.empty()) throw UsageError("mae: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::fabs(y[i] - y_hat[i]);
    return acc / static_cast<double>(y.size());
}

double trimmed_mean(std::vector<double> runs) {
    if (runs.size() < 3)
        throw UsageError("trimmed_mean: protocol needs at least 3 runs, got " +
                         std::to_string(runs.size()));
    std::sort(runs.begin(), runs.end());
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < runs.size(); ++i) acc += runs[i];
    return acc / static_cast<double>(runs.size() - 2);
}

Adam::Adam(std::vector<std::pair<std::string, Tensor>>& params, const TrainConfig& cfg)
    : params_(&params), cfg_(cfg) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i].second.numel(), 0.0);
        v_[i].assign(params[i].second.numel(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_->size(); ++i) {
        Tensor& p = (*params_)[i].second;
        if (!p.has_grad()) continue;
        const std::vector<double>& g = p.grad();
        std::vector<double>& w = p.mutable_data();
        std::vector<double>& m = m_[i];
        std::vector<double>& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        p.zero_grad();
    }
}

namespace {

std::vector<std::vector<double>> snapshot(const CrossformerModel& model) {
    std::vector<std::vector<double>> out;
    out.reserve(model.named_params().size());
    for (const auto& [name, t] : model.named_params()) out.push_back(t.data());
    return out;
}

void restore(CrossformerModel& model, const std::vector<std::vector<double>>& snap) {
    auto& params = model.named_params();
    for (std::size_t i = 0; i < params.size(); ++i) params[i].second.mutable_data() = snap[i];
}

} // namespace

TrainResult train(CrossformerModel& model, const WindowSet& train_windows,
                  const WindowSet& val_windows, const TrainConfig& cfg) {
    if (train_windows.size() == 0 || val_windows.size() == 0)
        throw UsageError("train: empty window set");
    Adam opt(model.named_params(), cfg);
    std::mt19937_64 order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.best_val_mse = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_params = snapshot(model);
    std::size_t stale = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch) {
            const std::size_t batch_end = std::min(pos + cfg.batch, order.size());
            const double inv_batch = 1.0 / static_cast<double>(batch_end - pos);
            model.zero_grads();
            for (std::size_t b = pos; b < batch_end; ++b) {
                Tape tape;
                Tape::Scope scope(tape);
                Tensor pred = model.forward(train_windows.input(order[b]));
                Tensor err = sub(pred, train_windows.target(order[b]));
                Tensor loss = mean(mul(err, err));
                const double lv = loss.item();
                if (!std::isfinite(lv))
                    throw NumericalError(
                        "training diverged: non-finite loss at epoch " +
                        std::to_string(epoch) + " (suspect learning rate or init)");
                epoch_loss += lv;
                ++seen;
                tape.backward(scale(loss, inv_batch));
            }
            opt.step();
        }
        const double val = evaluate(model, val_windows).mse;
        result.history.push_back({epoch, epoch_loss / static_cast<double>(seen), val});
        result.epochs_run = epoch;
        if (val < result.best_val_mse) {
            result.best_val_mse = val;
            result.best_epoch = epoch;
            best_params = snapshot(model);
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    restore(model, best_params);
    return result;
}

MetricsReport evaluate(const CrossformerModel& model, const WindowSet& windows) {
    if (windows.size() == 0) throw UsageError("evaluate: empty window set");
    const std::size_t n_windows = windows.size();
    const std::size_t per_window = windows.horizon() * windows.frame().dims();
    std::vector<double> se(n_windows, 0.0), ae(n_windows, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (long long k = 0; k < static_cast<long long>(n_windows); ++k) {
        Tensor pred = model.forward(windows.input(static_cast<std::size_t>(k)));
        Tensor truth = windows.target(static_cast<std::size_t>(k));
        const std::vector<double>& p = pred.data();
        const std::vector<double>& t = truth.data();
        double s = 0.0, a = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = t[i] - p[i];
            s += d * d;
            a += std::fabs(d);
        }
        se[static_cast<std::size_t>(k)] = s;
        ae[static_cast<std::size_t>(k)] = a;
    }
    MetricsReport rep;
    rep.n = n_windows * per_window;
    double s_total = 0.0, a_total = 0.0;
    for (std::size_t k = 0; k < n_windows; ++k) {
        s_total += se[k];
        a_total += ae[k];
    }
    rep.mse = s_total / static_cast<double>(rep.n);
    rep.mae = a_total / static_cast<double>(rep.n);
    if (rep.mae * rep.mae > rep.mse * (1.0 + 1e-9))
        throw NumericalError("metrics violate MAE^2 <= MSE; evaluator is inconsistent");
    return rep;
}

MetricsReport evaluate_persistence(const WindowSet& windows) {
    if (windows.size() == 0) throw UsageError("evaluate: empty window set");
    MetricsReport rep;
    double s_total = 0.0, a_total = 0.0;
    std::size_t n = 0;
    const std::size_t T = windows.input_len();
    const std::size_t tau = windows.horizon();
    const std::size_t D = windows.frame().dims();
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const std::size_t start = windows.start_row(k);
        const TimeSeriesFrame& f = windows.frame();
        for (std::size_t h = 0; h < tau; ++h) {
            for (std::size_t d = 0; d < D; ++d) {
                const double last = f.at(start + T - 1, d);
                const double truth = f.at(start + T + h, d);
                const double diff = truth - last;
                s_total += diff * diff;
                a_total += std::fabs(diff);
                ++n;
            }
        }
    }
    rep.n = n;
    rep.mse = s_total / static_cast<double>(n);
    rep.mae = a_total / static_cast<double>(n);
    return rep;
}

} // namespace crossalarm
