#pragma once

#include <map>
#include <string>

#include "cvar/param_store.hpp"

namespace cvar {

// Binary parameter container: magic header, version, string metadata,
// then per parameter name / frozen flag / shape / raw float64 payload.
// Round-trips are bit-exact.

void save_checkpoint(const std::string& path, const ParameterStore& params,
                     const std::map<std::string, std::string>& meta = {});

// Reads a checkpoint into a fresh store; returns metadata via out-param.
ParameterStore read_checkpoint(const std::string& path,
                               std::map<std::string, std::string>* meta = nullptr);

// Loads values into an existing store in place. Every checkpoint parameter
// must exist in `into` with a matching shape.
std::map<std::string, std::string> load_checkpoint(const std::string& path,
                                                   ParameterStore& into);

// Reads only the metadata block.
std::map<std::string, std::string> peek_checkpoint_meta(const std::string& path);

}  // namespace cvar
