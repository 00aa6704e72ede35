#include "crossalarm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace crossalarm {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'X', 'A', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; add byte swapping for this platform");

json config_to_json(const ModelConfig& c) {
    return json{{"T", c.T},          {"tau", c.tau},
                {"L_seg", c.L_seg},  {"d_model", c.d_model},
                {"heads", c.heads},  {"layers", c.layers},
                {"routers", c.routers}, {"D", c.D},
                {"mlp_hidden_mult", c.mlp_hidden_mult}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.T = j.at("T");
    c.tau = j.at("tau");
    c.L_seg = j.at("L_seg");
    c.d_model = j.at("d_model");
    c.heads = j.at("heads");
    c.layers = j.at("layers");
    c.routers = j.at("routers");
    c.D = j.at("D");
    c.mlp_hidden_mult = j.at("mlp_hidden_mult");
    return c;
}

json meta_json(const CrossformerModel& model, const std::vector<std::string>& channels,
               const NormStats& stats, const TrainRecord& record) {
    json tensors = json::array();
    std::size_t offset = 0;
    for (const auto& [name, t] : model.named_params()) {
        tensors.push_back(json{{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += t.numel();
    }
    return json{{"format_version", kVersion},
                {"hyper", config_to_json(model.config())},
                {"channels", channels},
                {"norm_stats", json{{"channels", stats.channels},
                                    {"mean", stats.mean},
                                    {"std", stats.stddev}}},
                {"train", json{{"seed", record.seed},
                               {"best_val_mse", record.best_val_mse},
                               {"epochs_run", record.epochs_run},
                               {"init", "xavier-normal / pos 0.02 gaussian"}}},
                {"tensors", tensors}};
}

Checkpoint meta_from_json(const json& j) {
    Checkpoint ck;
    ck.config = config_from_json(j.at("hyper"));
    ck.channels = j.at("channels").get<std::vector<std::string>>();
    const json& ns = j.at("norm_stats");
    ck.stats.channels = ns.at("channels").get<std::vector<std::string>>();
    ck.stats.mean = ns.at("mean").get<std::vector<double>>();
    ck.stats.stddev = ns.at("std").get<std::vector<double>>();
    const json& tr = j.at("train");
    ck.record.seed = tr.at("seed");
    ck.record.best_val_mse = tr.at("best_val_mse");
    ck.record.epochs_run = tr.at("epochs_run");
    return ck;
}

json read_header(std::ifstream& in, const std::string& path) {
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t json_len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&json_len), sizeof(json_len));
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("'" + path + "' is not a crossalarm checkpoint");
    if (version != kVersion)
        throw DataError("checkpoint '" + path + "' has unsupported version " +
                        std::to_string(version));
    std::string text(json_len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(json_len));
    if (!in) throw DataError("checkpoint '" + path + "' is truncated");
    return json::parse(text);
}

} // namespace

void save_checkpoint(const std::string& path, const CrossformerModel& model,
                     const std::vector<std::string>& channels, const NormStats& stats,
                     const TrainRecord& record) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    const std::string header = meta_json(model, channels, stats, record).dump();
    const std::uint64_t json_len = header.size();
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    out.write(reinterpret_cast<const char*>(&json_len), sizeof(json_len));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& [name, t] : model.named_params()) {
        (void)name;
        out.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    if (!out) throw DataError("failed while writing checkpoint: " + path);
}

CrossformerModel load_checkpoint(const std::string& path, Checkpoint* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    const json j = read_header(in, path);
    Checkpoint ck = meta_from_json(j);

    CrossformerModel model(ck.config, ck.record.seed);
    auto& params = model.named_params();
    const json& tensors = j.at("tensors");
    if (tensors.size() != params.size())
        throw DataError("checkpoint '" + path + "' tensor directory has " +
                        std::to_string(tensors.size()) + " entries, model expects " +
                        std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& [name, t] = params[i];
        const json& entry = tensors[i];
        if (entry.at("name") != name)
            throw DataError("checkpoint tensor '" + entry.at("name").get<std::string>() +
                            "' does not match expected '" + name + "'");
        const auto shape = entry.at("shape").get<Shape>();
        if (shape != t.shape())
            throw DataError("checkpoint tensor '" + name + "' has shape " +
                            shape_str(shape) + ", expected " + shape_str(t.shape()));
        in.read(reinterpret_cast<char*>(t.mutable_data().data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!in) throw DataError("checkpoint '" + path + "' is truncated in tensor data");
    }
    if (meta) *meta = std::move(ck);
    return model;
}

Checkpoint read_checkpoint_meta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    return meta_from_json(read_header(in, path));
}

} // namespace crossalarm
