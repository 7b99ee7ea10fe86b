#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "metashift/nn/parameters.hpp"

namespace metashift::nn {

// Binary checkpoint: "MSNN", u16 version, u32 name length + UTF-8 name, then
// for each layer in spec order its weight array and bias array, each as a u32
// element count followed by little-endian float32 values.

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string encode_checkpoint(const ParameterSet& params);

/// Decodes a checkpoint of one of the named architectures.
ParameterSet decode_checkpoint(std::string_view bytes, const std::string& source = "checkpoint");

/// Decodes against an explicit spec (required for custom architectures).
ParameterSet decode_checkpoint(std::string_view bytes, const ArchitectureSpec& spec,
                               const std::string& source = "checkpoint");

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_checkpoint(const std::filesystem::path& path);

}  // namespace metashift::nn
