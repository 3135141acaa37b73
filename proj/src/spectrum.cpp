#include "eomkit/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "eomkit/constants.hpp"
#include "eomkit/errors.hpp"
#include "eomkit/lineshapes.hpp"

namespace eomkit {

namespace {

void check_grid(const Eigen::ArrayXd& grid) {
    if (grid.size() == 0) throw InvalidParameter("frequency grid is empty");
    for (Eigen::Index i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw InvalidParameter("frequency grid must be strictly increasing");
    }
}

/// Cell boundaries at sample midpoints; end cells mirror their neighbours.
Eigen::ArrayXd cell_edges(const Eigen::ArrayXd& x) {
    const Eigen::Index n = x.size();
    Eigen::ArrayXd e(n + 1);
    if (n == 1) {
        e << x[0] - 0.5, x[0] + 0.5;
        return e;
    }
    for (Eigen::Index i = 1; i < n; ++i) e[i] = 0.5 * (x[i - 1] + x[i]);
    e[0] = x[0] - 0.5 * (x[1] - x[0]);
    e[n] = x[n - 1] + 0.5 * (x[n - 1] - x[n - 2]);
    return e;
}

double mode_backaction(const DeviceParams& dev, const MechanicalMode& m, double n_c) {
    return 4.0 * n_c * m.g * m.g / dev.kappa_o();
}

Eigen::ArrayXd median_filter(const Eigen::ArrayXd& y, Eigen::Index half) {
    const Eigen::Index n = y.size();
    Eigen::ArrayXd out(n);
    std::vector<double> buf;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
        buf.assign(y.data() + lo, y.data() + hi + 1);
        auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
        std::nth_element(buf.begin(), mid, buf.end());
        out[i] = *mid;
    }
    return out;
}

}  // namespace

void validate(const MechanicalMode& m) {
    if (!(m.f > 0.0) || !(m.gamma > 0.0)) throw InvalidParameter("mechanical mode needs positive frequency and linewidth");
    if (!(m.g >= 0.0) || !(m.gamma_e >= 0.0)) throw InvalidParameter("mechanical mode couplings must be non-negative");
    if (!(m.phi >= 0.0 && m.phi < kTwoPi)) throw InvalidParameter("mechanical mode phase must lie in [0, 2pi)");
}

MechanicalMode principal_mode(const DeviceParams& dev, double n_c, Detuning sign) {
    return {dev.f_m(), total_mech_linewidth(dev, n_c, sign), dev.g_om(), 0.0, dev.gamma_me()};
}

MechanicalMode with_backaction(MechanicalMode mode, const DeviceParams& dev, double n_c, Detuning sign) {
    const double g = mode_backaction(dev, mode, n_c);
    if (sign == Detuning::blue) {
        if (g >= mode.gamma) throw InstabilityError("mode backaction reaches its linewidth (parametric oscillation)");
        mode.gamma -= g;
    } else {
        mode.gamma += g;
    }
    return mode;
}

double coherent_phonons(const MechanicalMode& mode, const DriveTone& drive) {
    if (!(drive.f > 0.0) || !(drive.p_mu >= 0.0)) throw InvalidParameter("drive needs positive frequency and non-negative power");
    const double flux = drive.p_mu / (PhysicalConstants::h * drive.f);
    const double chi2 = std::norm(mechanical_susceptibility(drive.f, mode.f, mode.gamma));
    return kTwoPi * mode.gamma_e * chi2 * flux;
}

double gamma_e_from_phonons(double n_coh, const MechanicalMode& mode, const DriveTone& drive) {
    if (!(drive.f > 0.0) || !(drive.p_mu > 0.0)) throw InvalidParameter("drive needs positive frequency and power");
    const double flux = drive.p_mu / (PhysicalConstants::h * drive.f);
    const double chi2 = std::norm(mechanical_susceptibility(drive.f, mode.f, mode.gamma));
    return n_coh / (kTwoPi * chi2 * flux);
}

Trace thermal_spectrum(const DeviceParams& dev, const std::vector<MechanicalMode>& modes, double n_c, double n_th,
                       const Eigen::ArrayXd& grid) {
    check_grid(grid);
    if (!(n_c >= 0.0) || !(n_th >= 0.0)) throw InvalidParameter("n_c and n_th must be non-negative");
    Eigen::ArrayXd y = Eigen::ArrayXd::Zero(grid.size());
    for (const auto& m : modes) {
        validate(m);
        const double area = n_th * mode_backaction(dev, m, n_c);
        for (Eigen::Index i = 0; i < grid.size(); ++i) y[i] += lorentzian(grid[i], m.f, m.gamma, area);
    }
    return Trace(grid, std::move(y), Unit::hz, Unit::psd, {"frequency", "thermal sideband PSD", 0.0});
}

Trace driven_spectrum(const DeviceParams& dev, const std::vector<MechanicalMode>& modes, double n_c, double n_th,
                      const DriveTone& drive, double rbw, const Eigen::ArrayXd& grid) {
    if (!(rbw > 0.0)) throw InvalidParameter("resolution bandwidth must be positive");
    Trace base = thermal_spectrum(dev, modes, n_c, n_th, grid);
    double area = 0.0;
    for (const auto& m : modes) area += coherent_phonons(m, drive) * mode_backaction(dev, m, n_c);

    Eigen::ArrayXd y = base.y();
    if (area > 0.0) {
        const Eigen::ArrayXd e = cell_edges(grid);
        const double lo = drive.f - 0.5 * rbw;
        const double hi = drive.f + 0.5 * rbw;
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const double overlap = std::min(hi, e[i + 1]) - std::max(lo, e[i]);
            if (overlap > 0.0) y[i] += area * overlap / (rbw * (e[i + 1] - e[i]));
        }
    }
    Trace out = base.with_y(std::move(y));
    out.meta().y_label = "driven sideband PSD";
    out.meta().rbw = rbw;
    return out;
}

PhononCalibration calibrate_coherent_phonons(const Trace& spectrum, double n_th) {
    if (!(n_th > 0.0)) throw InvalidParameter("n_th must be positive");
    const Eigen::Index n = spectrum.size();
    if (n < 32) throw InvalidParameter("calibration needs at least 32 spectral samples");
    const Eigen::ArrayXd& x = spectrum.x();
    const Eigen::ArrayXd& y = spectrum.y();
    const double spacing = (x[n - 1] - x[0]) / static_cast<double>(n - 1);
    const double rbw = spectrum.meta().rbw;

    // The drive peak occupies about rbw plus the instrument cell; mask a few
    // extra cells on each side.
    const Eigen::Index half_cells = static_cast<Eigen::Index>(std::ceil(0.5 * rbw / spacing)) + 3;
    if (4 * half_cells >= n) throw FitError("drive peak is not resolvable from the thermal line on this grid");

    const Eigen::ArrayXd smooth = median_filter(y, 2 * half_cells);
    Eigen::Index ipk = 0;
    (y - smooth).maxCoeff(&ipk);

    const auto window = [&](Eigen::Index centre) {
        Eigen::ArrayXd w = Eigen::ArrayXd::Ones(n);
        const Eigen::Index lo = std::max<Eigen::Index>(0, centre - half_cells);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, centre + half_cells);
        w.segment(lo, hi - lo + 1).setZero();
        return w;
    };

    Eigen::ArrayXd w = window(ipk);
    FitResult fit = fit_lorentzian_multi(spectrum, 1, ConstantBackground{}, w);
    const auto model_of = [&](const FitResult& f) {
        const auto pk = lorentz_peaks(f).front();
        Eigen::ArrayXd m(n);
        for (Eigen::Index i = 0; i < n; ++i) m[i] = lorentzian(x[i], pk.center, pk.fwhm, pk.area);
        return Eigen::ArrayXd(m + f.value("bg_offset"));
    };

    // Re-centre the mask on the largest excess over the fitted line.
    Eigen::ArrayXd model = model_of(fit);
    Eigen::Index ipk2 = 0;
    (y - model).maxCoeff(&ipk2);
    if (std::abs(ipk2 - ipk) > half_cells) {
        ipk = ipk2;
        w = window(ipk);
        fit = fit_lorentzian_multi(spectrum, 1, ConstantBackground{}, w);
        model = model_of(fit);
    }
    if (!fit.converged) throw FitError("thermal Lorentzian fit did not converge");

    const auto pk = lorentz_peaks(fit).front();
    const double height = 2.0 * pk.area / (kPi * pk.fwhm);
    if (!(pk.area > 0.0) || !(height > 0.0)) throw FitError("no thermal Lorentzian found");
    if (pk.fwhm < 4.0 * spacing) throw FitError("thermal line is narrower than the grid resolves");
    if (fit.residual_norm > 0.2 * height) throw FitError("calibration fit residual exceeds 20% of the thermal peak");

    const Eigen::ArrayXd e = cell_edges(x);
    double excess = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w[i] == 0.0) excess += (y[i] - model[i]) * (e[i + 1] - e[i]);
    }

    PhononCalibration out;
    out.coherent_area = excess;
    out.thermal_area = pk.area;
    out.n_coh = n_th * excess / pk.area;
    out.drive_f = x[ipk];
    out.thermal_fit = std::move(fit);
    return out;
}

Eigen::ArrayXcd s_oe_response(const DeviceParams& dev, const std::vector<MechanicalMode>& modes,
                              const PumpState& pump, const Eigen::ArrayXd& grid) {
    check_grid(grid);
    if (modes.empty()) throw InvalidParameter("S_oe needs at least one mechanical mode (empty spectrum)");
    const double side = pump.sign() == Detuning::blue ? 1.0 : -1.0;
    const double enhanced = kTwoPi * std::sqrt(pump.n_c);
    const double port = std::sqrt(dev.eta_oc());

    Eigen::ArrayXcd out(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double f = grid[i];
        std::complex<double> mech = 0.0;
        for (const auto& m : modes) {
            validate(m);
            mech += enhanced * m.g * std::sqrt(kTwoPi * m.gamma_e) * std::polar(1.0, m.phi) *
                    mechanical_susceptibility(f, m.f, m.gamma);
        }
        // Stokes sideband for a blue pump, anti-Stokes for a red pump.
        const double delta = pump.detuning - side * f;
        out[i] = port * cavity_sideband_filter(delta, dev.kappa_o(), dev.kappa_oe()) * mech;
    }
    return out;
}

Trace s_oe_spectrum(const DeviceParams& dev, const std::vector<MechanicalMode>& modes, const PumpState& pump,
                    const Eigen::ArrayXd& grid) {
    Eigen::ArrayXd mag = s_oe_response(dev, modes, pump, grid).abs();
    return Trace(grid, std::move(mag), Unit::hz, Unit::dimensionless, {"frequency", "|S_oe|", 0.0});
}

Trace add_white_noise(const Trace& t, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw InvalidParameter("noise level must be non-negative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::ArrayXd y = t.y();
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * dist(rng);
    return t.with_y(std::move(y));
}

}  // namespace eomkit
