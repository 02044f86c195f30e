#pragma once

#include <string>

#include "cmsc/nn.hpp"

namespace cmsc {

// Binary checkpoint: "CMSCCKP1" magic, entry count, then per tensor a name,
// a buffer flag, the shape, and raw little-endian 64-bit floats.
void save_params(const ParamStore& store, const std::string& path);

// Loads by name into an already-registered store; every stored tensor must
// exist with a matching shape.
void load_params(ParamStore& store, const std::string& path);

}  // namespace cmsc
