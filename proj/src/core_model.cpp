#include "eomkit/core_model.hpp"

#include <cmath>
#include <sstream>

#include "eomkit/constants.hpp"
#include "eomkit/errors.hpp"

namespace eomkit {

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void require_positive(std::vector<std::string>& out, const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be positive and finite (got " + num(v) + ")");
}

void require_nonneg(std::vector<std::string>& out, const char* name, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be non-negative and finite (got " + num(v) + ")");
}

}  // namespace

std::string to_string(Detuning d) { return d == Detuning::blue ? "blue" : "red"; }

Detuning parse_detuning(const std::string& s) {
    if (s == "blue") return Detuning::blue;
    if (s == "red") return Detuning::red;
    throw InvalidParameter("detuning sign must be 'blue' or 'red', got '" + s + "'");
}

DeviceParams::DeviceParams(const Fields& fields) : f_(fields) {
    auto issues = violations(fields);
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::vector<std::string> DeviceParams::violations(const Fields& f) {
    std::vector<std::string> out;
    require_positive(out, "f_o", f.f_o);
    require_positive(out, "kappa_o", f.kappa_o);
    require_positive(out, "kappa_oe", f.kappa_oe);
    require_positive(out, "f_m", f.f_m);
    require_positive(out, "gamma_mi", f.gamma_mi);
    // Zero coupling is a legitimate (decoupled) device.
    require_nonneg(out, "gamma_me", f.gamma_me);
    require_nonneg(out, "g_om", f.g_om);
    require_nonneg(out, "c_idt", f.c_idt);
    require_positive(out, "z0", f.z0);
    if (f.kappa_oe > f.kappa_o) {
        out.push_back("kappa_oe (" + num(f.kappa_oe) + ") exceeds kappa_o (" + num(f.kappa_o) + ")");
    }
    if (!(f.eta_oc >= 0.0 && f.eta_oc <= 1.0)) out.push_back("eta_oc must lie in [0, 1] (got " + num(f.eta_oc) + ")");
    return out;
}

PumpState PumpState::make(const DeviceParams& dev, double detuning, std::optional<double> p_on_chip,
                          std::optional<double> n_c, double rel_tol) {
    if (!std::isfinite(detuning)) throw InvalidParameter("pump detuning must be finite");
    if (!p_on_chip && !n_c) throw InvalidParameter("pump needs an on-chip power or a photon number");
    if (p_on_chip && !(*p_on_chip >= 0.0)) throw InvalidParameter("p_on_chip must be non-negative");
    if (n_c && !(*n_c >= 0.0)) throw InvalidParameter("n_c must be non-negative");

    PumpState s;
    s.detuning = detuning;
    const double per_watt = photon_number(dev, detuning, 1.0);
    if (p_on_chip && n_c) {
        const double predicted = per_watt * *p_on_chip;
        const double scale = std::max(predicted, *n_c);
        if (scale > 0.0 && std::abs(predicted - *n_c) > rel_tol * scale) {
            throw InvalidParameter("n_c (" + num(*n_c) + ") disagrees with p_on_chip, which implies n_c = " + num(predicted));
        }
        s.p_on_chip = *p_on_chip;
        s.n_c = *n_c;
    } else if (p_on_chip) {
        s.p_on_chip = *p_on_chip;
        s.n_c = per_watt * *p_on_chip;
    } else {
        s.n_c = *n_c;
        s.p_on_chip = *n_c / per_watt;
    }
    return s;
}

Detuning PumpState::sign() const {
    if (detuning > 0.0) return Detuning::blue;
    if (detuning < 0.0) return Detuning::red;
    throw InvalidParameter("a resonant pump (zero detuning) has no sideband sign");
}

double photon_number(const DeviceParams& dev, double detuning, double p_on_chip) {
    if (!(p_on_chip >= 0.0)) throw InvalidParameter("p_on_chip must be non-negative (got " + num(p_on_chip) + ")");
    if (!(dev.kappa_o() > 0.0)) throw InvalidParameter("kappa_o must be positive");
    const double photon_flux = p_on_chip / (PhysicalConstants::h * dev.f_o());
    const double delta = kTwoPi * detuning;
    const double half_width = kPi * dev.kappa_o();
    return photon_flux * kTwoPi * dev.kappa_oe() / (delta * delta + half_width * half_width);
}

double cooperativity(const DeviceParams& dev, double n_c, double gamma_m) {
    if (!(gamma_m > 0.0)) throw InvalidParameter("gamma_m must be positive (got " + num(gamma_m) + ")");
    if (!(n_c >= 0.0)) throw InvalidParameter("n_c must be non-negative");
    return 4.0 * n_c * dev.g_om() * dev.g_om() / (dev.kappa_o() * gamma_m);
}

double backaction_rate(const DeviceParams& dev, double n_c) {
    if (!(n_c >= 0.0)) throw InvalidParameter("n_c must be non-negative");
    return 4.0 * n_c * dev.g_om() * dev.g_om() / dev.kappa_o();
}

double total_mech_linewidth(const DeviceParams& dev, double n_c, Detuning sign) {
    const double g = backaction_rate(dev, n_c);
    if (sign == Detuning::red) return dev.gamma_mi() + g;
    if (g >= dev.gamma_mi()) {
        throw InstabilityError("blue-detuned backaction " + num(g) + " Hz reaches the intrinsic linewidth " +
                               num(dev.gamma_mi()) + " Hz (parametric oscillation)");
    }
    return dev.gamma_mi() - g;
}

Efficiencies efficiencies(const DeviceParams& dev, double gamma_m) {
    if (!(gamma_m > 0.0)) throw InvalidParameter("gamma_m must be positive");
    if (dev.gamma_me() > gamma_m) {
        throw InvalidParameter("gamma_me (" + num(dev.gamma_me()) + ") exceeds gamma_m (" + num(gamma_m) + ")");
    }
    return {dev.kappa_oe() / dev.kappa_o(), dev.gamma_me() / gamma_m};
}

double conversion_gain(double c_om, Detuning sign) {
    if (!(c_om >= 0.0)) throw InvalidParameter("cooperativity must be non-negative");
    if (sign == Detuning::blue && c_om >= 1.0) {
        throw InstabilityError("blue-detuned cooperativity " + num(c_om) + " is at or above 1");
    }
    const double d = sign == Detuning::blue ? 1.0 - c_om : 1.0 + c_om;
    return 4.0 * c_om / (d * d);
}

EfficiencyChain efficiency_chain(const DeviceParams& dev, double n_c, Detuning sign) {
    EfficiencyChain c;
    c.n_c = n_c;
    c.gamma_om = backaction_rate(dev, n_c);
    c.c_om = cooperativity(dev, n_c, dev.gamma_mi());
    const auto eff = efficiencies(dev, dev.gamma_mi());
    c.eta_oc = dev.eta_oc();
    c.eta_o = eff.eta_o;
    c.eta_em = eff.eta_em;
    c.eta_tot = c.eta_oc * c.eta_o * c.eta_em * conversion_gain(c.c_om, sign);
    c.gamma_tot = total_mech_linewidth(dev, n_c, sign);
    return c;
}

double total_efficiency(const DeviceParams& dev, double n_c, Detuning sign) {
    return efficiency_chain(dev, n_c, sign).eta_tot;
}

double total_efficiency(const DeviceParams& dev, const PumpState& pump, Detuning sign) {
    return total_efficiency(dev, pump.n_c, sign);
}

double thermal_occupation(double f, double T) {
    if (!(T > 0.0) || !(f > 0.0)) throw InvalidParameter("thermal_occupation needs positive frequency and temperature");
    const double x = PhysicalConstants::h * f / (PhysicalConstants::k_B * T);
    return 1.0 / std::expm1(x);
}

}  // namespace eomkit
