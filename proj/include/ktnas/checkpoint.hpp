#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ktnas/common.hpp"
#include "ktnas/optimizer.hpp"
#include "ktnas/supernet.hpp"

namespace ktnas {

// Checkpoint = <prefix>.json manifest + <prefix>.bin blob. The manifest lists
// every tensor with its shape and byte offset into the little-endian float32
// blob; optimizer moments are stored under adam_m/ and adam_v/ prefixes.
struct CheckpointMeta {
    int64_t step = 0;
    int epoch = 0;
    std::string rng_state;
    nlohmann::json extra;
};

namespace detail {

template <class S>
void collect_entries(const std::string& prefix, const Supernet<S>& net,
                     std::vector<std::pair<std::string, const Mat<S>*>>& out) {
    visit_params(net, [&](const std::string& name, const Mat<S>& m) {
        out.emplace_back(prefix + name, &m);
    });
}

}  // namespace detail

template <class S>
void save_checkpoint(const std::string& prefix, const Supernet<S>& params,
                     const AdamState<S>* adam, const CheckpointMeta& meta) {
    std::vector<std::pair<std::string, const Mat<S>*>> entries;
    detail::collect_entries("param/", params, entries);
    if (adam) {
        detail::collect_entries("adam_m/", adam->m, entries);
        detail::collect_entries("adam_v/", adam->v, entries);
    }

    nlohmann::json manifest;
    manifest["dtype"] = "f32";
    manifest["meta"] = {{"step", meta.step}, {"epoch", meta.epoch}, {"rng_state", meta.rng_state}};
    if (!meta.extra.is_null()) manifest["meta"]["extra"] = meta.extra;
    if (adam) manifest["meta"]["adam_step"] = adam->step;

    std::ofstream blob(prefix + ".bin", std::ios::binary);
    require(blob.good(), "save_checkpoint: cannot open " + prefix + ".bin");
    int64_t offset = 0;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [name, mat] : entries) {
        list.push_back({{"name", name},
                        {"rows", mat->rows()},
                        {"cols", mat->cols()},
                        {"offset", offset}});
        for (index_t i = 0; i < mat->size(); ++i) {
            float v = static_cast<float>(mat->data()[i]);
            blob.write(reinterpret_cast<const char*>(&v), sizeof(float));
        }
        offset += static_cast<int64_t>(mat->size()) * static_cast<int64_t>(sizeof(float));
    }
    manifest["entries"] = list;
    require(blob.good(), "save_checkpoint: write failed for " + prefix + ".bin");
    blob.close();

    std::ofstream mf(prefix + ".json");
    require(mf.good(), "save_checkpoint: cannot open " + prefix + ".json");
    mf << manifest.dump(2) << '\n';
    require(mf.good(), "save_checkpoint: write failed for " + prefix + ".json");
}

inline nlohmann::json read_checkpoint_manifest(const std::string& prefix) {
    std::ifstream mf(prefix + ".json");
    require(mf.good(), "load_checkpoint: cannot open " + prefix + ".json");
    return nlohmann::json::parse(mf);
}

// Loads tensors by name. Missing tensors are an error unless allow_missing is
// set (used when warm-starting a model whose fusion mode differs from the
// checkpointed supernet).
template <class S>
CheckpointMeta load_checkpoint(const std::string& prefix, Supernet<S>& params, AdamState<S>* adam,
                               bool allow_missing = false) {
    nlohmann::json manifest = read_checkpoint_manifest(prefix);
    require(manifest.at("dtype") == "f32", "load_checkpoint: unsupported dtype");

    std::ifstream blob(prefix + ".bin", std::ios::binary);
    require(blob.good(), "load_checkpoint: cannot open " + prefix + ".bin");

    struct Entry {
        int64_t rows, cols, offset;
    };
    std::map<std::string, Entry> index;
    for (const auto& e : manifest.at("entries"))
        index[e.at("name").get<std::string>()] = {e.at("rows").get<int64_t>(),
                                                  e.at("cols").get<int64_t>(),
                                                  e.at("offset").get<int64_t>()};

    auto load_into = [&](const std::string& prefix_tag, Supernet<S>& net) {
        visit_params(net, [&](const std::string& name, Mat<S>& m) {
            auto it = index.find(prefix_tag + name);
            if (it == index.end()) {
                require(allow_missing, "load_checkpoint: missing tensor " + prefix_tag + name);
                return;
            }
            require(it->second.rows == m.rows() && it->second.cols == m.cols(),
                    "load_checkpoint: shape mismatch for " + name);
            blob.seekg(it->second.offset);
            for (index_t i = 0; i < m.size(); ++i) {
                float v;
                blob.read(reinterpret_cast<char*>(&v), sizeof(float));
                m.data()[i] = static_cast<S>(v);
            }
            require(blob.good(), "load_checkpoint: blob read failed for " + name);
        });
    };
    load_into("param/", params);
    if (adam) {
        load_into("adam_m/", adam->m);
        load_into("adam_v/", adam->v);
        if (manifest.at("meta").contains("adam_step"))
            adam->step = manifest.at("meta").at("adam_step").get<int64_t>();
    }

    CheckpointMeta meta;
    meta.step = manifest.at("meta").at("step").get<int64_t>();
    meta.epoch = manifest.at("meta").at("epoch").get<int>();
    meta.rng_state = manifest.at("meta").at("rng_state").get<std::string>();
    if (manifest.at("meta").contains("extra")) meta.extra = manifest.at("meta").at("extra");
    return meta;
}

}  // namespace ktnas
