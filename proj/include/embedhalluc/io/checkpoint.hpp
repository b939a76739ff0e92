#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "embedhalluc/autodiff/nn.hpp"

namespace embedhalluc::io {

// A checkpoint directory holds manifest.txt (format version, kind, config
// echo, one line per tensor with name, shape and offset) and params.bin, the
// concatenated tensors as little-endian 64-bit floats.
struct Checkpoint {
    static constexpr int format_version = 1;

    std::string kind;
    std::map<std::string, std::string> config;
    std::map<std::string, ad::Tensor> tensors;

    const std::string& require(const std::string& key) const;
};

void save_checkpoint(const std::filesystem::path& dir, const std::string& kind,
                     const std::map<std::string, std::string>& config, const std::vector<ad::NamedTensor>& tensors);

Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Copies checkpoint values into existing tensors by name; shapes must match
// and every target must be present.
void restore_tensors(const Checkpoint& checkpoint, const std::vector<ad::NamedTensor>& targets);

std::string join_sizes(const std::vector<std::size_t>& values);
std::vector<std::size_t> parse_sizes(const std::string& text);

}  // namespace embedhalluc::io
