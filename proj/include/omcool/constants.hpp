#pragma once

// Physical constants (CODATA 2018). All other code works in natural units
// (hbar = k_B = 1, rates as fractions of the mechanical frequency); these
// constants enter only when converting to/from Kelvin.
namespace omcool::constants {

inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_B = 1.380649e-23;      // J / K

}  // namespace omcool::constants
