#pragma once

// Least-squares problems behind the fitters, in the fitters' internal scaled
// units. Exposed so the analytic Jacobians can be checked independently.

#include <Eigen/Core>

#include "eomkit/core_model.hpp"
#include "eomkit/least_squares.hpp"
#include "eomkit/link_sim.hpp"

namespace eomkit::models {

/// Normalized reflection; p = (center, kappa, kappa - 2 kappa_e, scale).
LeastSquaresProblem reflection_dip(Eigen::ArrayXd x, Eigen::ArrayXd y);

/// Wrapped phase residual of the sideband beat note; p = (detuning / kappa_o).
LeastSquaresProblem sideband_phase(Eigen::ArrayXd f, Eigen::ArrayXd phase, const DeviceParams& dev);

/// Weighted sum of Lorentzians; p = (center, fwhm, area) per peak, then
/// `n_bg` polynomial background coefficients.
LeastSquaresProblem lorentz_sum(Eigen::ArrayXd x, Eigen::ArrayXd y, Eigen::ArrayXd sqrt_w, int n_peaks, int n_bg);

/// Ring-up or ring-down on a unit time axis; p = (level, rate).
LeastSquaresProblem ring(Eigen::ArrayXd tau, Eigen::ArrayXd y, RingKind kind);

}  // namespace eomkit::models
