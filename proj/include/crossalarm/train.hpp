#pragma once

#include <cstdint>
#include <span>

#include "crossalarm/model.hpp"

// MSE training on normal-drilling windows with adaptive moment estimation,
// early stopping on validation MSE, and a deterministic batch order fixed by
// the seed. Metrics follow the MAE/MSE definitions, with the optional
// trimmed multi-run protocol (drop min and max, average the rest).

namespace crossalarm {

double mse(std::span<const double> y, std::span<const double> y_hat);
double mae(std::span<const double> y, std::span<const double> y_hat);

// Multi-run protocol: requires k >= 3 runs, drops one min and one max.
double trimmed_mean(std::vector<double> runs);

struct MetricsReport {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t n = 0;   // scalar samples compared
};

struct TrainConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch = 32;
    std::size_t max_epochs = 50;
    std::size_t patience = 5;
    std::uint64_t seed = 42;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    double best_val_mse = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

class Adam {
public:
    Adam(std::vector<std::pair<std::string, Tensor>>& params, const TrainConfig& cfg);
    // Applies accumulated gradients and clears them.
    void step();

private:
    std::vector<std::pair<std::string, Tensor>>* params_;
    TrainConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

TrainResult train(CrossformerModel& model, const WindowSet& train_windows,
                  const WindowSet& val_windows, const TrainConfig& cfg);

MetricsReport evaluate(const CrossformerModel& model, const WindowSet& windows);

// Hold-last-value forecast over the same windows; the trivial comparator.
MetricsReport evaluate_persistence(const WindowSet& windows);

} // namespace crossalarm
