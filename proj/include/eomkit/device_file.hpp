#pragma once

// Device description files: INI-style sections with unit-suffixed keys.
//
//   [optical]            f_o_hz, kappa_o_hz, kappa_oe_hz, eta_oc
//   [mechanical]         f_m_hz, gamma_mi_hz, g_om_hz, temperature_k
//   [electromechanical]  gamma_me_hz, c_idt_f, z0_ohm
//   [pump]               detuning_hz, p_on_chip_dbm | p_on_chip_w, n_c
//   [qubit]              c_q_f, f_mu_hz, kappa_mu_hz
//   [modes]              f_hz, gamma_hz, g_hz, phi_rad, gamma_e_hz  (one block per mode)
//
// `key = value` or `key: value`; `#` starts a comment.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eomkit/core_model.hpp"
#include "eomkit/spectrum.hpp"
#include "eomkit/swap.hpp"

namespace eomkit {

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// "-7.9dbm", "1.6e-4w" or a bare number (watts).
double parse_power(const std::string& text);

struct PumpSpec {
    double detuning = 0.0;
    std::optional<double> p_on_chip;  // W
    std::optional<double> n_c;

    bool operator==(const PumpSpec&) const = default;
};

struct DeviceBundle {
    DeviceParams device;
    std::optional<PumpSpec> pump_spec;
    std::optional<QubitConfig> qubit;
    /// Mode linewidths here are intrinsic (no optical backaction).
    std::vector<MechanicalMode> modes;
    double temperature = 300.0;  // K

    std::optional<PumpState> pump() const;

    bool operator==(const DeviceBundle&) const = default;
};

/// Parses a device file, collecting every violation before throwing
/// ValidationError.
DeviceBundle parse_device(std::istream& in, const std::string& source = "<input>");
DeviceBundle load_device(const std::filesystem::path& path);

/// Lossless text form (17 significant digits).
void write_device(std::ostream& out, const DeviceBundle& bundle);

/// Looks up a device file by name: as given, then in each directory of
/// $EOMKIT_DEVICE_PATH (colon separated), then in the bundled data directory.
std::filesystem::path resolve_device_path(const std::string& name);

}  // namespace eomkit
