#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crossalarm/data.hpp"
#include "crossalarm/model.hpp"
#include "crossalarm/risk.hpp"
#include "crossalarm/synthetic.hpp"
#include "crossalarm/train.hpp"

// Flat key = value run configuration. Every key has a built-in default
// except the data path; a config file overrides defaults, --set pairs
// override the file, and CROSSALARM_SEED overrides the seed. The merged
// result is echoed into the output directory so any run can be reproduced
// from its artifacts alone. Unknown keys are rejected.

namespace crossalarm {

class KeyValueConfig {
public:
    static KeyValueConfig with_defaults();

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    void set_pair(const std::string& key_eq_value);   // "key=value"

    const std::string& raw(const std::string& key) const;
    bool has(const std::string& key) const;           // non-empty value

    std::string get_str(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma split
    std::optional<std::int64_t> get_time(const std::string& key) const;

    void write(const std::string& path) const;

private:
    std::map<std::string, std::string> kv_;
};

struct RunConfig {
    KeyValueConfig raw;

    std::string csv_path;
    ChannelMap channel_map;
    double cadence_s = 4;
    double max_gap_s = 300;
    SplitSpec split_spec;

    ModelConfig model;   // D filled from the channel list
    TrainConfig train_cfg;
    std::size_t window_stride = 1;
    std::size_t val_stride = 1;
    bool resume = false;

    RiskConfig risk_cfg;
    ThresholdConfig threshold_cfg;
    std::optional<std::int64_t> normal_begin, normal_end;
    std::size_t min_persist = 3;
    std::optional<double> mse_tau_override;

    SyntheticConfig synth;
    std::string out_dir = "out";

    static RunConfig from(const KeyValueConfig& kv);

    std::string data_dir() const { return out_dir + "/data"; }
    std::string model_dir() const { return out_dir + "/model"; }
    std::string checkpoint_path() const { return model_dir() + "/checkpoint.bin"; }
};

} // namespace crossalarm
