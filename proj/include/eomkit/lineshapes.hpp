#pragma once

// Elementary response functions shared by the synthesizers and the fitters.
// All rates are ordinary frequencies (Hz); angular factors live in here.

#include <cmath>
#include <complex>
#include <numbers>

namespace eomkit {

/// Area-normalized Lorentzian with full width at half maximum `fwhm`.
template <class Scalar>
Scalar lorentzian(Scalar x, Scalar center, Scalar fwhm, Scalar area) {
    const Scalar hw = fwhm / Scalar(2);
    const Scalar d = x - center;
    return area * hw / (std::numbers::pi_v<Scalar> * (d * d + hw * hw));
}

/// chi(f) = 1 / (i 2pi (f_res - f) + pi gamma)
template <class Scalar>
std::complex<Scalar> mechanical_susceptibility(Scalar f, Scalar f_res, Scalar gamma) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    return Scalar(1) / std::complex<Scalar>(pi * gamma, Scalar(2) * pi * (f_res - f));
}

/// Side-coupled cavity reflection r = 1 - 2pi kappa_e / (i 2pi delta + pi kappa),
/// with delta the probe detuning from the cavity.
template <class Scalar>
std::complex<Scalar> cavity_reflection(Scalar delta, Scalar kappa, Scalar kappa_e) {
    return Scalar(1) - Scalar(2) * kappa_e / std::complex<Scalar>(kappa, Scalar(2) * delta);
}

/// |r|^2 written out in real arithmetic.
template <class Scalar>
Scalar cavity_reflectance(Scalar delta, Scalar kappa, Scalar kappa_e) {
    const Scalar u = kappa - Scalar(2) * kappa_e;
    const Scalar d2 = Scalar(4) * delta * delta;
    return (u * u + d2) / (kappa * kappa + d2);
}

/// Amplitude filter sqrt(2pi kappa_e) / |i 2pi delta + pi kappa| seen by an
/// intracavity sideband detuned by `delta` from the cavity.
template <class Scalar>
Scalar cavity_sideband_filter(Scalar delta, Scalar kappa, Scalar kappa_e) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    return std::sqrt(Scalar(2) * pi * kappa_e) / std::abs(std::complex<Scalar>(pi * kappa, Scalar(2) * pi * delta));
}

}  // namespace eomkit
