// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameter files and run manifests.
//
// Binary parameter layout (little-endian):
//   char[8]  magic "MAGNETPS"
//   u32      format version (1)
//   u32      tensor count
//   per tensor:
//     u32 name length, name bytes (UTF-8, no terminator)
//     u32 rank, u64 dims[rank]
//     f64 values[prod(dims)], row-major
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "magnet/autodiff.hpp"

namespace magnet {

inline constexpr char kParamMagic[8] = {'M', 'A', 'G', 'N', 'E', 'T', 'P', 'S'};
inline constexpr std::uint32_t kParamVersion = 1;

void save_parameters(const ParameterSet<double>& params, const std::filesystem::path& path);
// Throws DataError on a bad magic, unsupported version or truncated file.
ParameterSet<double> load_parameters(const std::filesystem::path& path);

// Human-readable form: {"format": "magnet-params", "version": 1,
// "tensors": [{"name", "shape", "data"}...]}.
nlohmann::json parameters_to_json(const ParameterSet<double>& params);
ParameterSet<double> parameters_from_json(const nlohmann::json& j);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// manifest.json: the fields of `body` plus an "artifacts" map from file name
// (relative to dir) to checksum, for every listed file that exists.
void write_manifest(const std::filesystem::path& dir, nlohmann::json body,
                    const std::vector<std::string>& artifacts);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace magnet
