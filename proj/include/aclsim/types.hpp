#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace aclsim {

/// Which approximation of Maxwell's equations the model keeps.
enum class EmAssumption { Electrostatic, QuasiStatic, FullyDynamic };

/// Electrical drive of the piezoelectric electrodes. Exactly one is active.
enum class ActuationMode { Charge, Current };

inline const char* to_string(EmAssumption em) {
  switch (em) {
    case EmAssumption::Electrostatic: return "electrostatic";
    case EmAssumption::QuasiStatic: return "quasistatic";
    case EmAssumption::FullyDynamic: return "fullydynamic";
  }
  return "?";
}

inline const char* to_string(ActuationMode mode) {
  return mode == ActuationMode::Charge ? "charge" : "current";
}

inline std::optional<EmAssumption> parse_em(std::string_view s) {
  if (s == "electrostatic") return EmAssumption::Electrostatic;
  if (s == "quasistatic") return EmAssumption::QuasiStatic;
  if (s == "fullydynamic") return EmAssumption::FullyDynamic;
  return std::nullopt;
}

inline std::optional<ActuationMode> parse_mode(std::string_view s) {
  if (s == "charge") return ActuationMode::Charge;
  if (s == "current") return ActuationMode::Current;
  return std::nullopt;
}

}  // namespace aclsim
