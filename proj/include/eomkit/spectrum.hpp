#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "eomkit/core_model.hpp"
#include "eomkit/fit_kit.hpp"
#include "eomkit/trace.hpp"

namespace eomkit {

/// One mechanical resonance as seen by the optical and microwave ports.
struct MechanicalMode {
    double f = 0.0;        // center frequency, Hz
    double gamma = 0.0;    // total linewidth, Hz
    double g = 0.0;        // optomechanical coupling magnitude, Hz
    double phi = 0.0;      // coupling phase, rad in [0, 2pi)
    double gamma_e = 0.0;  // electromechanical decay, Hz

    bool operator==(const MechanicalMode&) const = default;
};

void validate(const MechanicalMode& mode);

/// The device's principal mode with its backaction-modified linewidth.
MechanicalMode principal_mode(const DeviceParams& dev, double n_c, Detuning sign);

/// Narrows (blue) or broadens (red) `mode` by its own backaction rate.
MechanicalMode with_backaction(MechanicalMode mode, const DeviceParams& dev, double n_c, Detuning sign);

struct DriveTone {
    double f = 0.0;     // Hz
    double p_mu = 0.0;  // W delivered to the device
};

/// Steady-state coherent phonons of `mode` under `drive`:
/// n = 2pi gamma_e |chi(f_d)|^2 p / (h f_d).
double coherent_phonons(const MechanicalMode& mode, const DriveTone& drive);

/// Inverse of coherent_phonons for gamma_e.
double gamma_e_from_phonons(double n_coh, const MechanicalMode& mode, const DriveTone& drive);

/// Sum of thermal Lorentzians; mode j integrates to n_th * 4 n_c g_j^2 / kappa_o.
Trace thermal_spectrum(const DeviceParams& dev, const std::vector<MechanicalMode>& modes, double n_c, double n_th,
                       const Eigen::ArrayXd& grid);

/// Thermal spectrum plus a resolution-limited coherent peak at the drive
/// (a rectangle of width `rbw`, averaged over each grid cell so its area is
/// exact on any grid).
Trace driven_spectrum(const DeviceParams& dev, const std::vector<MechanicalMode>& modes, double n_c, double n_th,
                      const DriveTone& drive, double rbw, const Eigen::ArrayXd& grid);

struct PhononCalibration {
    double n_coh = 0.0;
    double coherent_area = 0.0;
    double thermal_area = 0.0;
    double drive_f = 0.0;
    FitResult thermal_fit;
};

/// Thermal-peak calibration: fits the thermal Lorentzian with the narrow
/// drive peak masked out, integrates the peak excess, and scales by n_th.
PhononCalibration calibrate_coherent_phonons(const Trace& spectrum, double n_th);

/// Complex microwave-to-optical scattering amplitude on `grid`.
Eigen::ArrayXcd s_oe_response(const DeviceParams& dev, const std::vector<MechanicalMode>& modes,
                              const PumpState& pump, const Eigen::ArrayXd& grid);

/// |S_oe| on `grid`.
Trace s_oe_spectrum(const DeviceParams& dev, const std::vector<MechanicalMode>& modes, const PumpState& pump,
                    const Eigen::ArrayXd& grid);

/// Adds zero-mean Gaussian noise of standard deviation `sigma`.
Trace add_white_noise(const Trace& t, double sigma, std::uint64_t seed);

}  // namespace eomkit
