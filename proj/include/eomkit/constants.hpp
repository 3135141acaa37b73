#pragma once

#include <numbers>

namespace eomkit {

/// CODATA 2018 exact SI values.
struct PhysicalConstants {
    static constexpr double h = 6.62607015e-34;        // J s
    static constexpr double hbar = h / (2.0 * std::numbers::pi);
    static constexpr double k_B = 1.380649e-23;        // J/K
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace eomkit
