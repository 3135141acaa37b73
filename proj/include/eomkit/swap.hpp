#pragma once

#include <Eigen/Core>

#include "eomkit/core_model.hpp"
#include "eomkit/trace.hpp"

namespace eomkit {

/// Microwave resonator (or transmon treated as one) attached to the IDT.
struct QubitConfig {
    double c_q = 0.0;       // F
    double f_mu = 0.0;      // Hz
    double kappa_mu = 0.0;  // Hz

    bool operator==(const QubitConfig&) const = default;
};

void validate(const QubitConfig& q);

/// Z_q = 1 / (2pi f_mu (C_IDT + C_q)).
double qubit_impedance(const QubitConfig& q, const DeviceParams& dev);

/// g_em = 0.5 sqrt(gamma_me f_m) sqrt(Z_q / Z_0), ordinary-frequency form.
double coupling_g_em(const DeviceParams& dev, const QubitConfig& q);

struct SwapReport {
    double z_q = 0.0;
    double g_em = 0.0;
    double threshold_gamma = 0.0;    // 4 g_em
    bool feasible = false;           // gamma_mi < threshold
    double c_em = 0.0;               // at the device's gamma_mi
    double c_em_at_threshold = 0.0;  // with gamma_mi set to the threshold
};

/// C_em = 4 g_em^2 / (gamma_m kappa_mu) with gamma_m = gamma_mi + gamma_me.
SwapReport swap_feasibility(const DeviceParams& dev, const QubitConfig& q);

/// Rates for the two-mode exchange, all ordinary frequencies (Hz); zero
/// losses are allowed.
struct RabiRates {
    double g = 0.0;
    double gamma_m = 0.0;   // mechanical energy decay
    double kappa_q = 0.0;   // qubit energy decay
};

struct RabiSwapTrace {
    Trace qubit;   // excitation probability of the qubit
    Trace phonon;  // phonon occupation
};

/// Single-excitation exchange starting from an excited qubit and an empty
/// mechanical mode. Throws SamplingError when the grid step exceeds
/// 1 / (20 g).
RabiSwapTrace rabi_swap_sim(const RabiRates& rates, const Eigen::ArrayXd& t_grid);
RabiSwapTrace rabi_swap_sim(const DeviceParams& dev, const QubitConfig& q, const Eigen::ArrayXd& t_grid);

}  // namespace eomkit
