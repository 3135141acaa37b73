#pragma once

// Lumped transducer model. Every rate and frequency is an ordinary frequency
// in Hz (omega / 2pi); powers are in W.

#include <optional>
#include <string>
#include <vector>

namespace eomkit {

enum class Detuning { blue, red };

std::string to_string(Detuning d);
Detuning parse_detuning(const std::string& s);

/// Validated lumped device record. Construction rejects invalid values.
class DeviceParams {
public:
    struct Fields {
        double f_o = 0.0;       // optical resonance
        double kappa_o = 0.0;   // total optical linewidth
        double kappa_oe = 0.0;  // extrinsic optical linewidth
        double f_m = 0.0;       // principal mechanical frequency
        double gamma_mi = 0.0;  // intrinsic mechanical linewidth
        double gamma_me = 0.0;  // electromechanical decay into the feedline
        double g_om = 0.0;      // vacuum optomechanical coupling
        double eta_oc = 1.0;    // grating / fiber coupling efficiency
        double c_idt = 0.0;     // F
        double z0 = 50.0;       // Ohm

        bool operator==(const Fields&) const = default;
    };

    explicit DeviceParams(const Fields& fields);

    /// All invariant violations of `fields`, empty when valid.
    static std::vector<std::string> violations(const Fields& fields);

    const Fields& fields() const noexcept { return f_; }

    double f_o() const noexcept { return f_.f_o; }
    double kappa_o() const noexcept { return f_.kappa_o; }
    double kappa_oe() const noexcept { return f_.kappa_oe; }
    double kappa_oi() const noexcept { return f_.kappa_o - f_.kappa_oe; }
    double f_m() const noexcept { return f_.f_m; }
    double gamma_mi() const noexcept { return f_.gamma_mi; }
    double gamma_me() const noexcept { return f_.gamma_me; }
    double g_om() const noexcept { return f_.g_om; }
    double eta_oc() const noexcept { return f_.eta_oc; }
    double c_idt() const noexcept { return f_.c_idt; }
    double z0() const noexcept { return f_.z0; }

    bool operator==(const DeviceParams&) const = default;

private:
    Fields f_;
};

/// Optical drive condition. Always carries all three quantities; whichever of
/// power and photon number was not supplied is derived from the other.
struct PumpState {
    double detuning = 0.0;   // Hz, laser minus cavity; positive is blue
    double p_on_chip = 0.0;  // W
    double n_c = 0.0;

    static constexpr double kDefaultAgreement = 0.05;

    static PumpState make(const DeviceParams& dev, double detuning, std::optional<double> p_on_chip,
                          std::optional<double> n_c, double rel_tol = kDefaultAgreement);

    Detuning sign() const;
};

struct Efficiencies {
    double eta_o = 0.0;
    double eta_em = 0.0;
};

/// Every factor of the conversion chain at one operating point.
struct EfficiencyChain {
    double n_c = 0.0;
    double gamma_om = 0.0;
    double gamma_tot = 0.0;
    double c_om = 0.0;
    double eta_oc = 0.0;
    double eta_o = 0.0;
    double eta_em = 0.0;
    double eta_tot = 0.0;
};

/// Intracavity photon number for a side-coupled cavity pumped at `detuning`.
double photon_number(const DeviceParams& dev, double detuning, double p_on_chip);

double cooperativity(const DeviceParams& dev, double n_c, double gamma_m);

/// Optical backaction rate 4 n_c g_om^2 / kappa_o.
double backaction_rate(const DeviceParams& dev, double n_c);

/// gamma_mi - gamma_om for blue detuning, gamma_mi + gamma_om for red.
/// Throws InstabilityError past the blue-side oscillation threshold.
double total_mech_linewidth(const DeviceParams& dev, double n_c, Detuning sign);

Efficiencies efficiencies(const DeviceParams& dev, double gamma_m);

/// 4C / (1 -+ C)^2.
double conversion_gain(double c_om, Detuning sign);

/// eta_oc eta_o eta_em 4C/(1 -+ C)^2 with C and eta_em referenced to the
/// intrinsic linewidth; the (1 -+ C) factor carries the backaction.
double total_efficiency(const DeviceParams& dev, double n_c, Detuning sign);
double total_efficiency(const DeviceParams& dev, const PumpState& pump, Detuning sign);

EfficiencyChain efficiency_chain(const DeviceParams& dev, double n_c, Detuning sign);

/// Bose-Einstein occupation of a mode at `f` (Hz) and temperature `T` (K).
double thermal_occupation(double f, double T);

}  // namespace eomkit
