#pragma once

#include <optional>
#include <string>

#include "crossalarm/data.hpp"
#include "crossalarm/model.hpp"

// Self-describing model container: a fixed little-endian binary layout with a
// JSON header (hyperparameters, channel list, normalization stats, training
// record, tensor directory) followed by raw float64 parameter data.

namespace crossalarm {

struct TrainRecord {
    std::uint64_t seed = 0;
    double best_val_mse = 0.0;
    std::size_t epochs_run = 0;
};

struct Checkpoint {
    ModelConfig config;
    std::vector<std::string> channels;
    NormStats stats;
    TrainRecord record;
};

void save_checkpoint(const std::string& path, const CrossformerModel& model,
                     const std::vector<std::string>& channels, const NormStats& stats,
                     const TrainRecord& record);

// Rebuilds the model with the stored hyperparameters and parameter values.
CrossformerModel load_checkpoint(const std::string& path, Checkpoint* meta = nullptr);

// Header-only read (no parameter data), for config-compatibility checks.
Checkpoint read_checkpoint_meta(const std::string& path);

} // namespace crossalarm
