#pragma once

#include <deque>
#include <optional>

#include "crossalarm/data.hpp"
#include "crossalarm/model.hpp"

// Risk signal and warning-threshold engine. Per-channel relative
// reconstruction errors (raw units, percent, near-zero truth guarded to 0)
// are min-max normalized over the evaluation span and summed across the
// included channels. The warning threshold is W_v = (1 + MSE_tau)(mu + 2
// sigma) over an incident-free window; warning time W_t = t_tau + t_p.

namespace crossalarm {

// |truth - pred| / |truth| * 100, or 0 when |truth| <= eps (pump-off guard).
double relative_error(double truth, double pred, double eps);

struct RiskSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<double> risk;                  // summed normalized errors
    std::vector<std::string> included;         // channel names entering the sum
    std::vector<double> per_channel;           // rows x included, normalized [0,1]
    double cadence_s = 0;
    std::size_t tau = 0;

    std::size_t rows() const { return risk.size(); }
};

struct RiskConfig {
    std::vector<std::string> excluded;   // channel names left out of the sum
    double epsilon_frac = 1e-3;          // eps = frac * per-channel raw std
};

// truth_raw: the evaluation frame in raw units (the span predictions were
// made over). preds: normalized model output; stats denormalize it. The
// first tau rows use the bootstrap alignment (truth from the tau rows before
// the first prediction); subsequent rows compare pred at T+lambda+tau with
// truth at T+lambda+1, so each risk value is available tau steps early.
RiskSeries risk_series(const TimeSeriesFrame& truth_raw, const PredictionSeries& preds,
                       const NormStats& stats, const RiskConfig& cfg);

struct ThresholdConfig {
    std::size_t k1 = 2;
    std::size_t k2 = 150;
    std::size_t min_samples = 100;
};

// Mean and population standard deviation of risk over frame rows
// [T + k1*tau, T + k2*tau].
std::pair<double, double> fit_normal_stats(const RiskSeries& risk,
                                           const ThresholdConfig& cfg);
// Same, over an explicit timestamp window [begin, end].
std::pair<double, double> fit_normal_stats(const RiskSeries& risk, std::int64_t begin,
                                           std::int64_t end, std::size_t min_samples);

// W_v = (1 + mse_tau) * (mu + 2 sigma); mse_tau is a fraction (0.235 = 23.5%).
double warning_threshold(double mu, double sigma, double mse_tau);

struct AlarmInterval {
    std::size_t begin = 0, end = 0;          // [begin, end) risk-row indices
    std::int64_t t_begin = 0, t_end = 0;
};

struct AlarmReport {
    double mu = 0, sigma = 0, mse_tau = 0, w_v = 0;
    double t_tau_s = 0;                       // tau * cadence
    std::optional<double> t_p_s;              // early-sign duration
    std::optional<double> w_t_s;              // t_tau + t_p
    std::vector<AlarmInterval> intervals;
    std::optional<std::int64_t> event_time;
};

// Alarm intervals are maximal runs of risk > w_v lasting >= min_persist
// steps. With an annotated event, t_p spans from the start of the earliest
// interval at or before the event to the event instant; without one, t_p is
// the earliest interval's length.
AlarmReport detect(const RiskSeries& risk, double w_v, std::size_t min_persist,
                   std::optional<std::int64_t> event_time,
                   double mu = 0, double sigma = 0, double mse_tau = 0);

// Streaming threshold: refit (mu, sigma) every refit_every samples over the
// trailing window_len non-alarmed samples. Starved refits hold the previous
// threshold and flag it stale.
class DynamicThresholdStream {
public:
    DynamicThresholdStream(double mse_tau, std::size_t refit_every,
                           std::size_t window_len, std::size_t min_samples);

    struct Step {
        double threshold;   // +inf until the first successful refit
        bool alarmed;
        bool stale;
    };

    Step push(double risk_value);
    double threshold() const { return threshold_; }

private:
    void refit();

    double mse_tau_;
    std::size_t refit_every_, window_len_, min_samples_;
    std::deque<double> normal_history_;
    double threshold_;
    bool stale_ = true;
    std::size_t since_refit_ = 0;
    std::size_t fresh_normal_ = 0;   // non-alarmed samples since last refit tick
};

} // namespace crossalarm
