#include "eomkit/swap.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/MatrixFunctions>

#include "eomkit/constants.hpp"
#include "eomkit/errors.hpp"

namespace eomkit {

void validate(const QubitConfig& q) {
    if (!(q.c_q > 0.0) || !(q.f_mu > 0.0) || !(q.kappa_mu > 0.0)) {
        throw InvalidParameter("qubit capacitance, frequency and linewidth must be positive");
    }
}

double qubit_impedance(const QubitConfig& q, const DeviceParams& dev) {
    validate(q);
    return 1.0 / (kTwoPi * q.f_mu * (dev.c_idt() + q.c_q));
}

double coupling_g_em(const DeviceParams& dev, const QubitConfig& q) {
    const double z_q = qubit_impedance(q, dev);
    return 0.5 * std::sqrt(dev.gamma_me() * dev.f_m()) * std::sqrt(z_q / dev.z0());
}

SwapReport swap_feasibility(const DeviceParams& dev, const QubitConfig& q) {
    SwapReport r;
    r.z_q = qubit_impedance(q, dev);
    r.g_em = coupling_g_em(dev, q);
    r.threshold_gamma = 4.0 * r.g_em;
    r.feasible = dev.gamma_mi() < r.threshold_gamma;
    const double g2 = r.g_em * r.g_em;
    r.c_em = 4.0 * g2 / ((dev.gamma_mi() + dev.gamma_me()) * q.kappa_mu);
    r.c_em_at_threshold = r.threshold_gamma > 0.0 ? 4.0 * g2 / ((r.threshold_gamma + dev.gamma_me()) * q.kappa_mu) : 0.0;
    return r;
}

RabiSwapTrace rabi_swap_sim(const RabiRates& rates, const Eigen::ArrayXd& t_grid) {
    if (!(rates.g >= 0.0) || !(rates.gamma_m >= 0.0) || !(rates.kappa_q >= 0.0)) {
        throw InvalidParameter("Rabi rates must be non-negative");
    }
    const Eigen::Index n = t_grid.size();
    if (n < 2) throw InvalidParameter("time grid needs at least two points");
    for (Eigen::Index i = 1; i < n; ++i) {
        if (!(t_grid[i] > t_grid[i - 1])) throw InvalidParameter("time grid must be strictly increasing");
        if (rates.g > 0.0 && t_grid[i] - t_grid[i - 1] > 1.0 / (20.0 * rates.g)) {
            throw SamplingError("time grid too coarse for the exchange rate: step must not exceed 1/(20 g)");
        }
    }

    // Amplitudes (qubit, mechanics): d/dt x = M x, with amplitude decay at
    // half the energy-decay rates.
    using Mat = Eigen::Matrix2cd;
    const std::complex<double> i(0.0, 1.0);
    const double g = kTwoPi * rates.g;
    Mat gen;
    gen << -0.5 * kTwoPi * rates.kappa_q, -i * g, -i * g, -0.5 * kTwoPi * rates.gamma_m;

    Eigen::Vector2cd state(1.0, 0.0);
    if (t_grid[0] != 0.0) state = (gen * t_grid[0]).exp() * state;
    Eigen::ArrayXd pq(n);
    Eigen::ArrayXd pm(n);
    pq[0] = std::norm(state[0]);
    pm[0] = std::norm(state[1]);
    double last_dt = -1.0;
    Mat step;
    for (Eigen::Index k = 1; k < n; ++k) {
        const double dt = t_grid[k] - t_grid[k - 1];
        if (dt != last_dt) {
            step = (gen * dt).exp();
            last_dt = dt;
        }
        state = step * state;
        pq[k] = std::norm(state[0]);
        pm[k] = std::norm(state[1]);
    }
    return {Trace(t_grid, std::move(pq), Unit::s, Unit::dimensionless, {"time", "qubit excitation", 0.0}),
            Trace(t_grid, std::move(pm), Unit::s, Unit::dimensionless, {"time", "phonon occupation", 0.0})};
}

RabiSwapTrace rabi_swap_sim(const DeviceParams& dev, const QubitConfig& q, const Eigen::ArrayXd& t_grid) {
    validate(q);
    return rabi_swap_sim(RabiRates{coupling_g_em(dev, q), dev.gamma_mi(), q.kappa_mu}, t_grid);
}

}  // namespace eomkit
