#pragma once

#include <string>

#include "json.hpp"
#include "topodiff/tensor.hpp"

namespace topodiff {

// Single-file parameter checkpoint: one JSON header line (names, shapes,
// byte offsets), then the raw little-endian float32 payload.
void save_checkpoint(const std::string& path, const ParamRefs& params,
                     const nlohmann::json& meta = nlohmann::json::object());

// Loads into an already-constructed parameter set; every named tensor must
// exist in the file with a matching shape.
nlohmann::json load_checkpoint(const std::string& path, ParamRefs& params);

// Header-only peek (for meta inspection without a network instance).
nlohmann::json read_checkpoint_header(const std::string& path);

}  // namespace topodiff
