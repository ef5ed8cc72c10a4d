#pragma once

#include <array>
#include <cstddef>
#include <string>

namespace fatigue {

// Raw stream kinds. RR carries inter-beat intervals in ms (the ECG
// modality after R-peak detection, which happens upstream of this
// project); ACCEL is tri-axial acceleration in g; TEMP is skin
// temperature in deg C; RESP is respiratory rate in breaths/min.
enum class Modality : int { RR = 0, ACCEL = 1, TEMP = 2, RESP = 3 };

constexpr std::size_t kModalityCount = 4;
constexpr std::array<Modality, kModalityCount> kAllModalities = {
    Modality::RR, Modality::ACCEL, Modality::TEMP, Modality::RESP};

inline std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }

const std::string& modality_name(Modality m);   // "rr", "accel", "temp", "resp"
// Sensor-level tag used in feature metadata; RR-derived features are
// tagged ECG.
const std::string& modality_tag(Modality m);    // "ECG", "ACCEL", "TEMP", "RESP"

}  // namespace fatigue
