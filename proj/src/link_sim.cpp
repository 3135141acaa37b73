#include "eomkit/link_sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <memory>
#include <random>
#include <unsupported/Eigen/FFT>

#include "eomkit/constants.hpp"
#include "eomkit/errors.hpp"
#include "eomkit/fit_models.hpp"
#include "eomkit/least_squares.hpp"

namespace eomkit {

namespace {

constexpr double kMinSamplesPerLinewidth = 20.0;

/// Value of `y` at fractional sample position `pos`.
double sample_at(const Eigen::ArrayXd& y, double pos) {
    const auto k = static_cast<Eigen::Index>(std::floor(pos));
    if (k >= y.size() - 1) return y[y.size() - 1];
    const double w = pos - static_cast<double>(k);
    return (1.0 - w) * y[k] + w * y[k + 1];
}

}  // namespace

void validate(const LinkConfig& cfg) {
    if (cfg.bits.empty()) throw InvalidParameter("bit sequence is empty");
    for (auto b : cfg.bits) {
        if (b > 1) throw InvalidParameter("bits must be 0 or 1");
    }
    if (!(cfg.rate > 0.0)) throw InvalidParameter("bit rate must be positive");
    if (!(cfg.gamma_m > 0.0)) throw InvalidParameter("gamma_m must be positive");
    if (!(cfg.noise_rms >= 0.0)) throw InvalidParameter("noise_rms must be non-negative");
    if (!(cfg.v0 > 0.0)) throw InvalidParameter("v0 must be positive");
    if (cfg.samples_per_bit < 8) throw InvalidParameter("samples_per_bit must be at least 8");
    if (static_cast<double>(cfg.samples_per_bit) * cfg.rate < kMinSamplesPerLinewidth * cfg.gamma_m) {
        throw SamplingError("sampling too coarse: samples_per_bit * rate must be at least 20 gamma_m (need " +
                            std::to_string(auto_samples_per_bit(cfg.rate, cfg.gamma_m)) + " samples per bit)");
    }
}

int auto_samples_per_bit(double rate, double gamma_m) {
    if (!(rate > 0.0) || !(gamma_m > 0.0)) throw InvalidParameter("rate and gamma_m must be positive");
    int spb = static_cast<int>(std::ceil(kMinSamplesPerLinewidth * gamma_m / rate));
    spb = std::max(spb, 16);
    return spb + (spb % 2);
}

std::vector<std::uint8_t> parse_bits(const std::string& text) {
    std::vector<std::uint8_t> bits;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '0' || c == '1') {
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            throw ParseError("bit string has invalid character '" + std::string(1, c) + "' at position " +
                             std::to_string(i));
        }
    }
    if (bits.empty()) throw ParseError("bit string is empty");
    return bits;
}

LinkRun run_link(const LinkConfig& cfg) {
    validate(cfg);
    const Eigen::Index spb = cfg.samples_per_bit;
    const Eigen::Index nsamp = static_cast<Eigen::Index>(cfg.bits.size()) * spb + 1;
    const double dt = 1.0 / (cfg.rate * static_cast<double>(spb));
    const double decay = std::exp(-kPi * cfg.gamma_m * dt);
    const double gain = -std::expm1(-kPi * cfg.gamma_m * dt);
    const double kick = std::sqrt(-std::expm1(-kTwoPi * cfg.gamma_m * dt));

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    Eigen::ArrayXd t(nsamp);
    Eigen::ArrayXcd beta(nsamp);
    Eigen::ArrayXd drive = Eigen::ArrayXd::Zero(nsamp);
    beta[0] = 0.0;
    t[0] = 0.0;
    for (Eigen::Index k = 0; k + 1 < nsamp; ++k) {
        const bool on = cfg.bits[static_cast<std::size_t>(k / spb)] != 0;
        drive[k] = on ? cfg.v0 : 0.0;
        std::complex<double> next = beta[k] * decay;
        if (on) {
            if (cfg.drive == DriveMode::coherent) {
                next += cfg.v0 * gain;
            } else {
                // Exact Ornstein-Uhlenbeck step; stationary E|beta|^2 = v0^2.
                const std::complex<double> xi(unit(rng), unit(rng));
                next += cfg.v0 * kick * xi / std::sqrt(2.0);
            }
        }
        beta[k + 1] = next;
        t[k + 1] = static_cast<double>(k + 1) * dt;
    }

    // Demodulated quadratures at the intermediate frequency.
    Eigen::ArrayXd i_q(nsamp);
    Eigen::ArrayXd q_q(nsamp);
    for (Eigen::Index k = 0; k < nsamp; ++k) {
        const std::complex<double> v = beta[k] * std::polar(1.0, kTwoPi * cfg.f_if * t[k]);
        i_q[k] = v.real();
        q_q[k] = v.imag();
    }
    if (cfg.noise_rms > 0.0) {
        for (Eigen::Index k = 0; k < nsamp; ++k) {
            i_q[k] += cfg.noise_rms * unit(rng);
            q_q[k] += cfg.noise_rms * unit(rng);
        }
    }
    Eigen::ArrayXd env = (i_q.square() + q_q.square()).sqrt();

    LinkRun run;
    run.envelope = Trace(t, std::move(env), Unit::s, Unit::volt, {"time", "|V_det|", 0.0});
    run.i = Trace(t, std::move(i_q), Unit::s, Unit::volt, {"time", "I", 0.0});
    run.q = Trace(t, std::move(q_q), Unit::s, Unit::volt, {"time", "Q", 0.0});
    run.baseband = std::move(beta);
    run.drive = std::move(drive);
    return run;
}

Trace edge_segment(const LinkRun& run, const LinkConfig& cfg, std::size_t bit) {
    if (bit == 0 || bit >= cfg.bits.size()) throw InvalidParameter("edge bit index out of range");
    if (cfg.bits[bit] == cfg.bits[bit - 1]) throw InvalidParameter("no transition before the requested bit");
    std::size_t end = bit;
    while (end + 1 < cfg.bits.size() && cfg.bits[end + 1] == cfg.bits[bit]) ++end;
    const Eigen::Index spb = cfg.samples_per_bit;
    const Eigen::Index first = static_cast<Eigen::Index>(bit) * spb;
    const Eigen::Index count = static_cast<Eigen::Index>(end + 1 - bit) * spb + 1;
    const Eigen::ArrayXd t = run.envelope.x().segment(first, count) - run.envelope.x()[first];
    return Trace(t, run.envelope.y().segment(first, count), Unit::s, Unit::volt, {"time since edge", "|V_det|", 0.0});
}

EyeDiagram eye_diagram(const LinkRun& run, const LinkConfig& cfg) {
    const std::size_t nbits = cfg.bits.size();
    const Eigen::Index spb = cfg.samples_per_bit;
    const Eigen::ArrayXd& env = run.envelope.y();
    if (env.size() != static_cast<Eigen::Index>(nbits) * spb + 1) throw InvalidParameter("run does not match config");

    EyeDiagram eye;
    const double period = 1.0 / cfg.rate;
    eye.t = Eigen::ArrayXd::LinSpaced(2 * spb + 1, -period, period);
    for (std::size_t b = 1; b < nbits; ++b) {
        if (cfg.bits[b] == cfg.bits[b - 1]) continue;
        const Eigen::Index start = static_cast<Eigen::Index>(b - 1) * spb;
        eye.segments.emplace_back(env.segment(start, 2 * spb + 1));
        eye.rising.push_back(cfg.bits[b] == 1);
    }
    if (eye.segments.empty()) throw InvalidParameter("bit sequence has no transitions: empty eye");

    double min_high = std::numeric_limits<double>::infinity();
    double max_low = -std::numeric_limits<double>::infinity();
    double sum_high = 0.0;
    double sum_low = 0.0;
    int n_high = 0;
    int n_low = 0;
    for (std::size_t b = 0; b < nbits; ++b) {
        const double v = sample_at(env, (static_cast<double>(b) + 0.5) * static_cast<double>(spb));
        if (cfg.bits[b]) {
            min_high = std::min(min_high, v);
            sum_high += v;
            ++n_high;
        } else {
            max_low = std::max(max_low, v);
            sum_low += v;
            ++n_low;
        }
    }
    auto& m = eye.metrics;
    m.transitions = static_cast<int>(eye.segments.size());
    m.mean_high = sum_high / n_high;
    m.mean_low = sum_low / n_low;
    m.opening = std::max(0.0, min_high - max_low);
    m.extinction_ratio = m.mean_low * EyeMetrics::kExtinctionCap > m.mean_high ? m.mean_high / m.mean_low
                                                                               : EyeMetrics::kExtinctionCap;

    // Ring-down rate from the longest falling edge.
    std::size_t best = 0;
    std::size_t best_len = 0;
    for (std::size_t b = 1; b < nbits; ++b) {
        if (cfg.bits[b] == 0 && cfg.bits[b - 1] == 1) {
            std::size_t len = 1;
            while (b + len < nbits && cfg.bits[b + len] == 0) ++len;
            if (len > best_len) {
                best_len = len;
                best = b;
            }
        }
    }
    if (best_len > 0) {
        try {
            const FitResult f = fit_ring(edge_segment(run, cfg, best), RingKind::ringdown);
            if (f.converged) m.fitted_gamma_m = f.value("gamma_m");
        } catch (const Error&) {
            // Leave NaN when the edge cannot be fitted.
        }
    }
    return eye;
}

FitResult fit_ring(const Trace& segment, RingKind kind) {
    const Eigen::Index n = segment.size();
    if (n < 4) throw InvalidParameter("ring fit needs at least 4 samples");
    const Eigen::ArrayXd tau = (segment.x() - segment.x()[0]) / (segment.x()[n - 1] - segment.x()[0]);
    const double span = segment.x()[n - 1] - segment.x()[0];
    const Eigen::ArrayXd& y = segment.y();
    const bool up = kind == RingKind::ringup;

    FitResult out;
    const double ymax = y.abs().maxCoeff();
    const bool flat = !(ymax > 0.0) || (y.maxCoeff() - y.minCoeff()) < 1e-6 * ymax;
    const bool shape_ok = up ? y[n - 1] > y[0] : y[0] > y[n - 1];

    // Seeds: level from the settled end, rate from the 1/e crossing.
    const double level = up ? y.tail(std::max<Eigen::Index>(1, n / 10)).mean() : y[0];
    double rate0 = 3.0;
    if (!flat && shape_ok) {
        const double target = up ? (1.0 - std::exp(-1.0)) * level : std::exp(-1.0) * level;
        for (Eigen::Index i = 1; i < n; ++i) {
            if ((up && y[i] >= target) || (!up && y[i] <= target)) {
                rate0 = 1.0 / std::max(tau[i], 1e-6);
                break;
            }
        }
    }

    // p = (V, pi gamma span): dimensionless rate in units of the segment length.
    LeastSquaresProblem prob = models::ring(tau, y, kind);
    prob.typical = Eigen::Vector2d(std::max(ymax, 1e-300), 1e-3);
    const auto res = damped_gauss_newton(prob, Eigen::Vector2d(level != 0.0 ? level : ymax, rate0));

    const double gamma = res.params[1] / (kPi * span);
    out.names = {"gamma_m", up ? "v_f" : "v_i"};
    out.units = {"Hz", "V"};
    out.values = Eigen::Vector2d(gamma, res.params[0]);
    Eigen::Matrix2d t = Eigen::Matrix2d::Zero();
    t(0, 1) = 1.0 / (kPi * span);
    t(1, 0) = 1.0;
    const Eigen::MatrixXd cov = parameter_covariance(res);
    out.covariance = cov.allFinite() ? Eigen::MatrixXd(t * cov * t.transpose())
                                     : Eigen::MatrixXd::Constant(2, 2, std::numeric_limits<double>::infinity());
    out.std_errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    out.residual_norm = std::sqrt(res.residual.squaredNorm() / static_cast<double>(n));
    out.converged = res.converged;
    out.iterations = res.iterations;

    if (flat || !(out.std_errors[0] < 0.5 * std::abs(gamma))) {
        out.flags.push_back("gamma_m unidentifiable from this segment");
    }
    if (!shape_ok || out.residual_norm > 0.1 * ymax) {
        out.flags.push_back("poor fit: segment shape does not match the requested ring kind");
    }
    if (!out.converged) out.flags.push_back("not converged; estimates are best-effort");
    return out;
}

Trace harmonic_spectrum(const SquareWaveDrive& d) {
    if (!(d.f0 > 0.0) || !(d.gamma_m > 0.0)) throw InvalidParameter("square-wave drive needs positive f0 and gamma_m");
    if (d.periods < 4) throw InvalidParameter("need at least 4 recorded periods");
    int spp = d.samples_per_period;
    if (spp == 0) spp = std::max(256, static_cast<int>(std::ceil(kMinSamplesPerLinewidth * d.gamma_m / d.f0)));
    spp += spp % 2;
    if (spp < 8 || static_cast<double>(spp) * d.f0 < kMinSamplesPerLinewidth * d.gamma_m) {
        throw SamplingError("square-wave sampling too coarse for the mechanical linewidth");
    }

    const double dt = 1.0 / (d.f0 * spp);
    const double decay = std::exp(-kPi * d.gamma_m * dt);
    const double gain = -std::expm1(-kPi * d.gamma_m * dt);
    // Settle until the start-up transient is below double precision.
    const double settle_time = 40.0 / (kPi * d.gamma_m);
    const long settle = static_cast<long>(std::ceil(settle_time * d.f0)) * spp;
    const long n = static_cast<long>(d.periods) * spp;

    double beta = 0.0;
    std::vector<std::complex<double>> rec(static_cast<std::size_t>(n));
    for (long k = 0; k < settle + n; ++k) {
        if (k >= settle) rec[static_cast<std::size_t>(k - settle)] = beta;
        const bool on = (k % spp) < spp / 2;
        beta = beta * decay + (on ? d.v0 * gain : 0.0);
    }

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, rec);

    const double fs = 1.0 / dt;
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    Eigen::ArrayXd x(n);
    Eigen::ArrayXd y(n);
    for (long k = 0; k < n; ++k) {
        const long bin = k - n / 2;  // fftshift
        const long src = (bin + n) % n;
        x[k] = d.f_m + static_cast<double>(bin) * fs / static_cast<double>(n);
        y[k] = std::norm(spec[static_cast<std::size_t>(src)]) * norm;
    }
    return Trace(std::move(x), std::move(y), Unit::hz, Unit::psd, {"frequency", "power per bin", d.f0 / d.periods});
}

double bin_power(const Trace& spectrum, double f_m, double offset) {
    const double target = f_m + offset;
    Eigen::Index best = 0;
    (spectrum.x() - target).abs().minCoeff(&best);
    return spectrum.y()[best];
}


namespace models {

LeastSquaresProblem ring(Eigen::ArrayXd tau, Eigen::ArrayXd y, RingKind kind) {
    auto data = std::make_shared<const std::pair<Eigen::ArrayXd, Eigen::ArrayXd>>(std::move(tau), std::move(y));
    const bool up = kind == RingKind::ringup;
    LeastSquaresProblem prob;
    prob.residual = [data, up](const Eigen::VectorXd& p) {
        const auto& [tau, y] = *data;
        const Eigen::ArrayXd e = (-p[1] * tau).exp();
        const Eigen::ArrayXd m = up ? Eigen::ArrayXd(p[0] * (1.0 - e)) : Eigen::ArrayXd(p[0] * e);
        return Eigen::VectorXd((m - y).matrix());
    };
    prob.jacobian = [data, up](const Eigen::VectorXd& p) {
        const auto& tau = data->first;
        const Eigen::ArrayXd e = (-p[1] * tau).exp();
        Eigen::MatrixXd j(tau.size(), 2);
        if (up) {
            j.col(0) = (1.0 - e).matrix();
            j.col(1) = (p[0] * tau * e).matrix();
        } else {
            j.col(0) = e.matrix();
            j.col(1) = (-p[0] * tau * e).matrix();
        }
        return j;
    };
    prob.feasible = [](const Eigen::VectorXd& p) { return p[1] > 0.0; };
    return prob;
}

}  // namespace models

}  // namespace eomkit
