#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "knock/error.hpp"
#include "knock/nn/model.hpp"

namespace knock::nn {

/**
 * Versioned checkpoint: metadata plus named tensors. After training it
 * carries two weight sets, `final/<param>` for the last epoch and
 * `best/<param>` for the epoch with the lowest validation loss.
 *
 * File layout: magic "KNCK", uint32 version, uint32 metadata length,
 * metadata JSON (cell, config echo, seed, training stats), uint32 tensor
 * count, then per tensor: uint32 name length, name, uint32 ndim,
 * uint32 dims, float64 data. All integers and floats little-endian.
 */
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    nlohmann::json metadata;
    std::vector<std::pair<std::string, std::pair<std::vector<std::size_t>,
                                                 std::vector<double>>>> tensors;

    void add_tensor(const std::string& name, const std::vector<std::size_t>& shape,
                    const std::vector<double>& data) {
        tensors.push_back({name, {shape, data}});
    }

    const std::pair<std::vector<std::size_t>, std::vector<double>>&
    tensor(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return t;
        throw FormatError("checkpoint: missing tensor " + name);
    }

    bool has_tensor(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return true;
        return false;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write checkpoint: " + path);
        out.write("KNCK", 4);
        write_u32(out, kVersion);
        const std::string meta = metadata.dump();
        write_u32(out, static_cast<std::uint32_t>(meta.size()));
        out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
        write_u32(out, static_cast<std::uint32_t>(tensors.size()));
        for (const auto& [name, t] : tensors) {
            write_u32(out, static_cast<std::uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_u32(out, static_cast<std::uint32_t>(t.first.size()));
            for (auto d : t.first) write_u32(out, static_cast<std::uint32_t>(d));
            out.write(reinterpret_cast<const char*>(t.second.data()),
                      static_cast<std::streamsize>(t.second.size() * sizeof(double)));
        }
        if (!out) throw IoError("checkpoint write failed: " + path);
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open checkpoint: " + path);
        char magic[4];
        if (!in.read(magic, 4) || std::string(magic, 4) != "KNCK")
            throw FormatError("bad checkpoint magic in " + path);
        const std::uint32_t version = read_u32(in, path);
        if (version != kVersion)
            throw FormatError("unsupported checkpoint version " +
                              std::to_string(version) + " in " + path);
        Checkpoint ck;
        const std::uint32_t meta_len = read_u32(in, path);
        std::string meta(meta_len, '\0');
        if (!in.read(meta.data(), meta_len))
            throw FormatError("truncated checkpoint metadata in " + path);
        ck.metadata = nlohmann::json::parse(meta);
        const std::uint32_t count = read_u32(in, path);
        for (std::uint32_t i = 0; i < count; ++i) {
            const std::uint32_t name_len = read_u32(in, path);
            std::string name(name_len, '\0');
            if (!in.read(name.data(), name_len))
                throw FormatError("truncated tensor name in " + path);
            const std::uint32_t ndim = read_u32(in, path);
            std::vector<std::size_t> shape(ndim);
            std::size_t total = 1;
            for (auto& d : shape) {
                d = read_u32(in, path);
                total *= d;
            }
            std::vector<double> data(total);
            if (!in.read(reinterpret_cast<char*>(data.data()),
                         static_cast<std::streamsize>(total * sizeof(double))))
                throw FormatError("truncated tensor data in " + path);
            ck.tensors.push_back({std::move(name), {std::move(shape), std::move(data)}});
        }
        return ck;
    }

private:
    static void write_u32(std::ostream& os, std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
        os.write(reinterpret_cast<const char*>(b), 4);
    }

    static std::uint32_t read_u32(std::istream& is, const std::string& path) {
        unsigned char b[4];
        if (!is.read(reinterpret_cast<char*>(b), 4))
            throw FormatError("truncated checkpoint: " + path);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    }
};

/// Serialize the model config so a checkpoint can rebuild its model.
inline nlohmann::json config_to_json(const ModelConfig& cfg) {
    return nlohmann::json{{"cell", to_string(cfg.cell)},
                          {"in_channels", cfg.in_channels},
                          {"conv1_out", cfg.conv1_out},
                          {"conv2_out", cfg.conv2_out},
                          {"kernel", cfg.kernel},
                          {"pool_kernel", cfg.pool_kernel},
                          {"hidden", cfg.hidden},
                          {"dropout_p", cfg.dropout_p},
                          {"classes", cfg.classes},
                          {"batch_size", cfg.batch_size},
                          {"epochs", cfg.epochs},
                          {"learning_rate", cfg.learning_rate},
                          {"frames", cfg.frames},
                          {"optimizer", cfg.optimizer == Optimizer::adam ? "adam" : "sgd"}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.cell = cell_from_string(j.at("cell").get<std::string>());
    cfg.in_channels = j.at("in_channels").get<std::size_t>();
    cfg.conv1_out = j.at("conv1_out").get<std::size_t>();
    cfg.conv2_out = j.at("conv2_out").get<std::size_t>();
    cfg.kernel = j.at("kernel").get<std::size_t>();
    cfg.pool_kernel = j.at("pool_kernel").get<std::size_t>();
    cfg.hidden = j.at("hidden").get<std::size_t>();
    cfg.dropout_p = j.at("dropout_p").get<double>();
    cfg.classes = j.at("classes").get<std::size_t>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.frames = j.at("frames").get<std::size_t>();
    cfg.optimizer = j.at("optimizer").get<std::string>() == "sgd" ? Optimizer::sgd
                                                                  : Optimizer::adam;
    cfg.validate();
    return cfg;
}

/// Copy one named weight set ("final" or "best") into a model.
inline void load_weights(Model& model, const Checkpoint& ck, const std::string& set) {
    for (const auto& name : model.parameter_names()) {
        const auto& [shape, data] = ck.tensor(set + "/" + name);
        Tensor& p = model.param(name);
        if (shape != p.shape())
            throw ShapeError("checkpoint tensor " + set + "/" + name +
                             " has incompatible shape");
        p.values() = data;
    }
}

/// Record a model's current weights into the checkpoint under a set name.
inline void store_weights(Checkpoint& ck, Model& model, const std::string& set) {
    for (const auto& name : model.parameter_names())
        ck.add_tensor(set + "/" + name, model.param(name).shape(),
                      model.param(name).values());
}

} // namespace knock::nn
