#include "crossalarm/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace crossalarm {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

const std::pair<const char*, const char*> kDefaults[] = {
    {"data.csv", ""},
    {"data.timestamp_column", "time"},
    {"data.channels",
     "hole_depth,bit_depth,block_position,torque,hookload,rotary_speed,spp,"
     "mud_flow_in,wob,rop"},
    {"data.column_map", ""},
    {"data.cadence_s", "4"},
    {"data.max_gap_s", "300"},
    {"data.train_frac", "0.7"},
    {"data.val_frac", "0.1"},
    {"data.test_frac", "0.2"},
    {"data.anomaly_start", ""},
    {"model.T", "96"},
    {"model.tau", "12"},
    {"model.L_seg", "12"},
    {"model.d_model", "64"},
    {"model.heads", "4"},
    {"model.layers", "3"},
    {"model.routers", "3"},
    {"model.mlp_hidden_mult", "4"},
    {"train.lr", "0.0001"},
    {"train.batch", "32"},
    {"train.max_epochs", "50"},
    {"train.patience", "5"},
    {"train.seed", "42"},
    {"train.window_stride", "1"},
    {"train.val_stride", "1"},
    {"train.resume", "false"},
    {"risk.exclude", "hole_depth,bit_depth,block_position"},
    {"risk.epsilon_frac", "0.001"},
    {"risk.k1", "2"},
    {"risk.k2", "150"},
    {"risk.min_samples", "100"},
    {"risk.normal_begin", ""},
    {"risk.normal_end", ""},
    {"risk.min_persist", "3"},
    {"risk.mse_tau", ""},
    {"synth.steps", "24000"},
    {"synth.seed", "7"},
    {"synth.noise", "0.02"},
    {"synth.inject_shift", "false"},
    {"synth.shift_begin_frac", "0.93"},
    {"synth.shift_end_frac", "0.97"},
    {"out.dir", "out"},
};

} // namespace

KeyValueConfig KeyValueConfig::with_defaults() {
    KeyValueConfig cfg;
    for (const auto& [k, v] : kDefaults) cfg.kv_[k] = v;
    return cfg;
}

void KeyValueConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + t + "'");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

void KeyValueConfig::set_pair(const std::string& key_eq_value) {
    const std::size_t eq = key_eq_value.find('=');
    if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got '" + key_eq_value + "'");
    set(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

const std::string& KeyValueConfig::raw(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

bool KeyValueConfig::has(const std::string& key) const { return !raw(key).empty(); }

std::string KeyValueConfig::get_str(const std::string& key) const { return raw(key); }

double KeyValueConfig::get_double(const std::string& key) const {
    const std::string& v = raw(key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size())
        throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
    return x;
}

std::size_t KeyValueConfig::get_size(const std::string& key) const {
    const double x = get_double(key);
    if (x < 0 || x != static_cast<double>(static_cast<std::size_t>(x)))
        throw ConfigError("config key '" + key + "' expects a non-negative integer");
    return static_cast<std::size_t>(x);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key) const {
    const std::string& v = raw(key);
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
        throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
    return x;
}

bool KeyValueConfig::get_bool(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::optional<std::int64_t> KeyValueConfig::get_time(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return parse_iso8601(raw(key));
}

void KeyValueConfig::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write config echo: " + path);
    for (const auto& [k, v] : kv_) out << k << " = " << v << "\n";
}

RunConfig RunConfig::from(const KeyValueConfig& kv) {
    RunConfig rc;
    rc.raw = kv;

    rc.csv_path = kv.get_str("data.csv");
    rc.channel_map.timestamp_column = kv.get_str("data.timestamp_column");
    std::map<std::string, std::string> column_map;
    if (kv.has("data.column_map")) {
        std::stringstream ss(kv.get_str("data.column_map"));
        std::string pair;
        while (std::getline(ss, pair, ';')) {
            const std::size_t eq = pair.find('=');
            if (eq == std::string::npos)
                throw ConfigError("data.column_map entries must be canonical=header; got '" +
                                  pair + "'");
            column_map[trim(pair.substr(0, eq))] = trim(pair.substr(eq + 1));
        }
    }
    for (const std::string& name : kv.get_list("data.channels")) {
        auto it = column_map.find(name);
        rc.channel_map.channels.emplace_back(
            name, it == column_map.end() ? name : it->second);
    }
    if (rc.channel_map.channels.size() < 2)
        throw ConfigError("data.channels must list at least 2 channels");

    rc.cadence_s = kv.get_double("data.cadence_s");
    rc.max_gap_s = kv.get_double("data.max_gap_s");
    rc.split_spec.train_frac = kv.get_double("data.train_frac");
    rc.split_spec.val_frac = kv.get_double("data.val_frac");
    rc.split_spec.test_frac = kv.get_double("data.test_frac");
    rc.split_spec.anomaly_start = kv.get_time("data.anomaly_start");

    rc.model.T = kv.get_size("model.T");
    rc.model.tau = kv.get_size("model.tau");
    rc.model.L_seg = kv.get_size("model.L_seg");
    rc.model.d_model = kv.get_size("model.d_model");
    rc.model.heads = kv.get_size("model.heads");
    rc.model.layers = kv.get_size("model.layers");
    rc.model.routers = kv.get_size("model.routers");
    rc.model.mlp_hidden_mult = kv.get_size("model.mlp_hidden_mult");
    rc.model.D = rc.channel_map.channels.size();

    rc.train_cfg.lr = kv.get_double("train.lr");
    rc.train_cfg.batch = kv.get_size("train.batch");
    rc.train_cfg.max_epochs = kv.get_size("train.max_epochs");
    rc.train_cfg.patience = kv.get_size("train.patience");
    rc.train_cfg.seed = kv.get_u64("train.seed");
    rc.window_stride = kv.get_size("train.window_stride");
    rc.val_stride = kv.get_size("train.val_stride");
    rc.resume = kv.get_bool("train.resume");

    rc.risk_cfg.excluded = kv.get_list("risk.exclude");
    rc.risk_cfg.epsilon_frac = kv.get_double("risk.epsilon_frac");
    rc.threshold_cfg.k1 = kv.get_size("risk.k1");
    rc.threshold_cfg.k2 = kv.get_size("risk.k2");
    rc.threshold_cfg.min_samples = kv.get_size("risk.min_samples");
    rc.normal_begin = kv.get_time("risk.normal_begin");
    rc.normal_end = kv.get_time("risk.normal_end");
    rc.min_persist = kv.get_size("risk.min_persist");
    if (kv.has("risk.mse_tau")) rc.mse_tau_override = kv.get_double("risk.mse_tau");

    rc.synth.steps = kv.get_size("synth.steps");
    rc.synth.seed = kv.get_u64("synth.seed");
    rc.synth.noise = kv.get_double("synth.noise");
    rc.synth.inject_shift = kv.get_bool("synth.inject_shift");
    rc.synth.shift_begin_frac = kv.get_double("synth.shift_begin_frac");
    rc.synth.shift_end_frac = kv.get_double("synth.shift_end_frac");
    rc.synth.cadence_s = rc.cadence_s;

    rc.out_dir = kv.get_str("out.dir");
    return rc;
}

} // namespace crossalarm
