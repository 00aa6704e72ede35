#include "crossalarm/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace crossalarm {

double relative_error(double truth, double pred, double eps) {
    if (std::fabs(truth) <= eps) return 0.0;
    return std::fabs(truth - pred) / std::fabs(truth) * 100.0;
}

RiskSeries risk_series(const TimeSeriesFrame& truth_raw, const PredictionSeries& preds,
                       const NormStats& stats, const RiskConfig& cfg) {
    const std::size_t D = truth_raw.dims();
    if (preds.D != D)
        throw DimensionError("risk_series: prediction width " + std::to_string(preds.D) +
                             " != frame channels " + std::to_string(D));
    const std::size_t T = preds.T, tau = preds.tau;
    if (tau > T)
        throw DataError("risk_series: bootstrap branch needs tau <= T (tau=" +
                        std::to_string(tau) + ", T=" + std::to_string(T) + ")");
    if (truth_raw.rows() < T + 1)
        throw DataError("risk_series: truth frame shorter than one window");
    // Alignment: prediction row r targets frame row T + r.
    if (truth_raw.timestamps[T] != preds.timestamps[0])
        throw DataError("risk_series: misaligned series; first prediction instant " +
                        format_iso8601(preds.timestamps[0]) + " vs frame row " +
                        format_iso8601(truth_raw.timestamps[T]));

    const std::size_t lambda_max = truth_raw.rows() - T;
    // Bootstrap rows plus sliding rows whose compared truth instant exists.
    const std::size_t n_rows = tau + (lambda_max > 0 ? lambda_max - 1 : 0);
    if (preds.rows() < n_rows)
        throw DataError("risk_series: prediction series shorter than expected");

    std::set<std::string> excluded(cfg.excluded.begin(), cfg.excluded.end());
    for (const std::string& name : cfg.excluded)
        if (!truth_raw.channel_index(name))
            throw ConfigError("risk exclusion list names unknown channel '" + name + "'");

    RiskSeries out;
    out.cadence_s = preds.cadence_s;
    out.tau = tau;
    std::vector<std::size_t> cols;
    for (std::size_t d = 0; d < D; ++d) {
        if (excluded.count(truth_raw.channels[d])) continue;
        cols.push_back(d);
        out.included.push_back(truth_raw.channels[d]);
    }

    out.timestamps.assign(preds.timestamps.begin(),
                          preds.timestamps.begin() + static_cast<std::ptrdiff_t>(n_rows));
    const std::size_t n_inc = cols.size();
    std::vector<double> raw(n_rows * n_inc, 0.0);

    for (std::size_t c = 0; c < n_inc; ++c) {
        const std::size_t d = cols[c];
        const double eps = cfg.epsilon_frac * stats.stddev[d];
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double pred_raw =
                preds.at(r, d) * stats.stddev[d] + stats.mean[d];
            // Bootstrap rows compare against the last tau truth values before
            // the first prediction; sliding rows use truth at T+lambda+1.
            std::size_t truth_row;
            if (r < tau) {
                truth_row = T - tau + r;
            } else {
                const std::size_t lambda = r - tau + 1;
                truth_row = T + lambda;   // 1-based instant T+lambda+1
            }
            raw[r * n_inc + c] =
                relative_error(truth_raw.at(truth_row, d), pred_raw, eps);
        }
    }

    // Min-max per included channel over the evaluation span.
    out.per_channel.assign(n_rows * n_inc, 0.0);
    out.risk.assign(n_rows, 0.0);
    for (std::size_t c = 0; c < n_inc; ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t r = 0; r < n_rows; ++r) {
            lo = std::min(lo, raw[r * n_inc + c]);
            hi = std::max(hi, raw[r * n_inc + c]);
        }
        const double span = hi - lo;
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double v = span > 0 ? (raw[r * n_inc + c] - lo) / span : 0.0;
            out.per_channel[r * n_inc + c] = v;
            out.risk[r] += v;
        }
    }
    return out;
}

namespace {

std::pair<double, double> mean_stddev(const std::vector<double>& v, std::size_t begin,
                                      std::size_t end) {
    const auto n = static_cast<double>(end - begin);
    double mu = 0.0;
    for (std::size_t i = begin; i < end; ++i) mu += v[i];
    mu /= n;
    double var = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double d = v[i] - mu;
        var += d * d;
    }
    return {mu, std::sqrt(var / n)};
}

} // namespace

std::pair<double, double> fit_normal_stats(const RiskSeries& risk, const ThresholdConfig& cfg) {
    if (cfg.k2 <= cfg.k1) throw UsageError("fit_normal_stats: k2 must exceed k1");
    // Risk row r corresponds to instant T+1+r; the window covers instants
    // [T + k1*tau, T + k2*tau].
    const std::size_t begin = cfg.k1 * risk.tau == 0 ? 0 : cfg.k1 * risk.tau - 1;
    const std::size_t end = cfg.k2 * risk.tau;   // exclusive, = index k2*tau-1 + 1
    if (end > risk.rows())
        throw UsageError("fit_normal_stats: window [k1*tau, k2*tau] extends past the "
                         "risk series (" + std::to_string(end) + " > " +
                         std::to_string(risk.rows()) + " rows)");
    if (end - begin < cfg.min_samples)
        throw UsageError("fit_normal_stats: window holds " + std::to_string(end - begin) +
                         " samples, need at least " + std::to_string(cfg.min_samples));
    return mean_stddev(risk.risk, begin, end);
}

std::pair<double, double> fit_normal_stats(const RiskSeries& risk, std::int64_t begin,
                                           std::int64_t end, std::size_t min_samples) {
    auto lo = std::lower_bound(risk.timestamps.begin(), risk.timestamps.end(), begin);
    auto hi = std::upper_bound(risk.timestamps.begin(), risk.timestamps.end(), end);
    const auto b = static_cast<std::size_t>(lo - risk.timestamps.begin());
    const auto e = static_cast<std::size_t>(hi - risk.timestamps.begin());
    if (e <= b || e - b < min_samples)
        throw UsageError("fit_normal_stats: timestamp window holds " +
                         std::to_string(e > b ? e - b : 0) + " samples, need " +
                         std::to_string(min_samples));
    return mean_stddev(risk.risk, b, e);
}

double warning_threshold(double mu, double sigma, double mse_tau) {
    return (1.0 + mse_tau) * (mu + 2.0 * sigma);
}

AlarmReport detect(const RiskSeries& risk, double w_v, std::size_t min_persist,
                   std::optional<std::int64_t> event_time, double mu, double sigma,
                   double mse_tau) {
    if (min_persist == 0) throw UsageError("detect: min_persist must be >= 1");
    AlarmReport rep;
    rep.mu = mu;
    rep.sigma = sigma;
    rep.mse_tau = mse_tau;
    rep.w_v = w_v;
    rep.t_tau_s = static_cast<double>(risk.tau) * risk.cadence_s;
    rep.event_time = event_time;

    const std::size_t n = risk.rows();
    std::size_t run_start = 0;
    bool in_run = false;
    auto close_run = [&](std::size_t end) {
        if (end - run_start >= min_persist) {
            AlarmInterval iv;
            iv.begin = run_start;
            iv.end = end;
            iv.t_begin = risk.timestamps[run_start];
            iv.t_end = risk.timestamps[end - 1] +
                       static_cast<std::int64_t>(risk.cadence_s);
            rep.intervals.push_back(iv);
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        const bool over = risk.risk[i] > w_v;
        if (over && !in_run) {
            in_run = true;
            run_start = i;
        } else if (!over && in_run) {
            in_run = false;
            close_run(i);
        }
    }
    if (in_run) close_run(n);

    if (!rep.intervals.empty()) {
        if (event_time) {
            for (const AlarmInterval& iv : rep.intervals) {
                if (iv.t_begin <= *event_time) {
                    rep.t_p_s = static_cast<double>(*event_time - iv.t_begin);
                    break;
                }
            }
        } else {
            const AlarmInterval& iv = rep.intervals.front();
            rep.t_p_s = static_cast<double>(iv.end - iv.begin) * risk.cadence_s;
        }
        if (rep.t_p_s) rep.w_t_s = rep.t_tau_s + *rep.t_p_s;
    }
    return rep;
}

DynamicThresholdStream::DynamicThresholdStream(double mse_tau, std::size_t refit_every,
                                               std::size_t window_len,
                                               std::size_t min_samples)
    : mse_tau_(mse_tau), refit_every_(refit_every), window_len_(window_len),
      min_samples_(min_samples),
      threshold_(std::numeric_limits<double>::infinity()) {
    if (refit_every_ == 0 || window_len_ == 0 || min_samples_ == 0)
        throw UsageError("DynamicThresholdStream: all sizes must be positive");
}

void DynamicThresholdStream::refit() {
    double mu = 0.0;
    for (double v : normal_history_) mu += v;
    mu /= static_cast<double>(normal_history_.size());
    double var = 0.0;
    for (double v : normal_history_) {
        const double d = v - mu;
        var += d * d;
    }
    var /= static_cast<double>(normal_history_.size());
    threshold_ = warning_threshold(mu, std::sqrt(var), mse_tau_);
    stale_ = false;
}

DynamicThresholdStream::Step DynamicThresholdStream::push(double risk_value) {
    const bool alarmed = risk_value > threshold_;
    if (!alarmed) {
        normal_history_.push_back(risk_value);
        ++fresh_normal_;
        while (normal_history_.size() > window_len_) normal_history_.pop_front();
    }
    if (++since_refit_ >= refit_every_) {
        since_refit_ = 0;
        if (normal_history_.size() >= min_samples_ && fresh_normal_ > 0) {
            refit();
        } else {
            stale_ = true;   // starved: hold the previous threshold
        }
        fresh_normal_ = 0;
    }
    return {threshold_, alarmed, stale_};
}

} // namespace crossalarm
