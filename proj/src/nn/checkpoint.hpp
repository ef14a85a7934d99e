// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <string>

#include "nn/network.hpp"

namespace acss::nn {

// Checkpoint byte layout (all integers little-endian):
//
//   magic        8 bytes  "ACSSCKPT"
//   version      u32      1
//   header_len   u32
//   header       header_len bytes of "key=value\n" lines (model config)
//   num_entries  u64
//   entries      num_entries x { u32 name_len, name bytes, u32 ndim (=2),
//                                u64 rows, u64 cols, u64 data_offset }
//   data         row-major IEEE-754 binary64 values, little-endian, at the
//                absolute file offsets given in the entry table
inline constexpr char kCheckpointMagic[8] = {'A', 'C', 'S', 'S', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_config(const NetConfig& cfg);
NetConfig decode_config(const std::string& header);

std::string serialize(const SpatioTemporalNet& net);
SpatioTemporalNet deserialize(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const SpatioTemporalNet& net);
SpatioTemporalNet load_checkpoint(const std::filesystem::path& path);

}  // namespace acss::nn
