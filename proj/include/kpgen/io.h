#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "kpgen/autodiff.h"

namespace kpgen {

// Writes to `path.tmp` and renames over `path`.
void atomic_write(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

std::string hex64(uint64_t v);

// Checkpoint container: {"format", "version", "kind", "meta", "params": [{name, shape, values}]}.
// Values are written with round-trip precision so save/load is exact.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::string& kind, const nlohmann::json& meta,
                     const ParameterStore& params);

// Loads values into an already-shaped store; every stored name must exist
// with the same shape and every store parameter must be present.
nlohmann::json load_checkpoint(const std::string& path, const std::string& kind, ParameterStore& params);

// Reads only the meta block (used to rebuild the store before loading).
nlohmann::json read_checkpoint_meta(const std::string& path, const std::string& kind);

}  // namespace kpgen
