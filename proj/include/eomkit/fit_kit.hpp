#pragma once

#include <Eigen/Core>
#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "eomkit/core_model.hpp"
#include "eomkit/trace.hpp"

namespace eomkit {

/// Named estimates with standard errors. `covariance` spans every reported
/// entry, derived ones included (linear propagation).
struct FitResult {
    std::vector<std::string> names;
    std::vector<std::string> units;
    Eigen::VectorXd values;
    Eigen::VectorXd std_errors;
    Eigen::MatrixXd covariance;
    double residual_norm = 0.0;  // RMS residual in data units
    bool converged = false;
    int iterations = 0;
    std::vector<std::string> flags;

    bool has(const std::string& name) const;
    Eigen::Index index(const std::string& name) const;
    double value(const std::string& name) const;
    double error(const std::string& name) const;
    double correlation(const std::string& a, const std::string& b) const;
};

/// Structured key-value text, one `name = value +- error unit` line per entry.
std::string format_fit(const FitResult& fit);

// Optical reflection dip -----------------------------------------------------

enum class CouplingBranch { under, over };

struct OpticalCavityFit {
    double f_o = 0.0;
    double kappa_o = 0.0;
    double kappa_oe = 0.0;
    double kappa_oi = 0.0;
};

/// Fits A |1 - 2pi kappa_oe / (i 2pi (f - f_o) + pi kappa_o)|^2 to a normalized
/// reflection sweep. The dip depth fixes kappa_oe only up to the exchange
/// kappa_oe <-> kappa_o - kappa_oe; both branches are reported
/// (kappa_oe_under, kappa_oe_over).
FitResult fit_optical_dip(const Trace& reflection);

OpticalCavityFit select_branch(const FitResult& dip_fit, CouplingBranch branch);

// Sideband phase response ----------------------------------------------------

/// Background-normalized beat note of a sideband at offset f against a pump
/// detuned by `detuning`: r(detuning + f) conj(r(detuning)).
std::complex<double> sideband_beat_response(const DeviceParams& dev, double detuning, double f);

/// Recovers the signed pump detuning from the phase of a swept-sideband
/// response. The magnitude trace seeds the search.
FitResult fit_phase_detuning(const Trace& magnitude, const Trace& phase, const DeviceParams& dev);

// Linewidth versus intracavity photon number --------------------------------

struct LinewidthPoint {
    double n_c = 0.0;
    double gamma = 0.0;  // Hz
};

/// Weighted straight line gamma(n_c) = gamma_mi -+ (4 g_om^2 / kappa_o) n_c.
/// Empty `weights` means unweighted.
FitResult fit_linewidth_vs_photons(const std::vector<LinewidthPoint>& points, Detuning sign, double kappa_o,
                                   const std::vector<double>& weights = {});

// Multi-Lorentzian -----------------------------------------------------------

struct ConstantBackground {};
struct LinearBackground {};
struct ReferenceBackground {
    Trace reference;
};
using Background = std::variant<ConstantBackground, LinearBackground, ReferenceBackground>;

struct LorentzPeak {
    double center = 0.0;
    double fwhm = 0.0;
    double area = 0.0;
};

/// Sum of `n_peaks` area-normalized Lorentzians plus background. Peaks are
/// seeded by iterative picking and reported sorted by center as
/// f_<j>, gamma_<j>, area_<j>. `weights` (same length as the trace, 0 masks a
/// sample) is optional.
FitResult fit_lorentzian_multi(const Trace& trace, int n_peaks, const Background& background,
                               const Eigen::ArrayXd& weights = {});

std::vector<LorentzPeak> lorentz_peaks(const FitResult& fit);

}  // namespace eomkit
