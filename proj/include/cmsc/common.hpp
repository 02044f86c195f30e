#pragma once

#include <stdexcept>
#include <string>

namespace cmsc {

// Violated precondition or invariant of a public contract.
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void contract_fail(const std::string& msg) {
    throw ContractError(msg);
}

inline void check(bool ok, const std::string& msg) {
    if (!ok) contract_fail(msg);
}

enum class Modality { Lidar, Camera, Standard };

inline const char* modality_name(Modality m) {
    switch (m) {
        case Modality::Lidar: return "lidar";
        case Modality::Camera: return "camera";
        case Modality::Standard: return "standard";
    }
    return "?";
}

inline Modality modality_from_name(const std::string& s) {
    if (s == "lidar") return Modality::Lidar;
    if (s == "camera") return Modality::Camera;
    if (s == "standard") return Modality::Standard;
    contract_fail("unknown modality: " + s);
}

}  // namespace cmsc
