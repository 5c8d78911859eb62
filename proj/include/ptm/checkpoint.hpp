#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ptm/errors.hpp"
#include "ptm/nn.hpp"

namespace ptm {

struct CheckpointCorrupt : Error {
    CheckpointCorrupt(const std::string& path, const std::string& reason)
        : Error(ErrorCategory::input, "CHECKPOINT_CORRUPT", "checkpoint " + path + ": " + reason) {}
};

struct CheckpointMeta {
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    std::string model;
};

// Container layout: magic "PTMC", one version byte, little-endian u64 JSON
// header length, the JSON header (config echo, seed, model, tensor table),
// then each tensor's values as packed little-endian float32 in table order.
void save_checkpoint(const std::string& path, const nn::ParamStore& params,
                     const CheckpointMeta& meta);
CheckpointMeta load_checkpoint(const std::string& path, nn::ParamStore& params_out);

}  // namespace ptm
