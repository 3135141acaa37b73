#include "eomkit/fit_kit.hpp"
#include "eomkit/fit_models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "eomkit/constants.hpp"
#include "eomkit/errors.hpp"
#include "eomkit/least_squares.hpp"
#include "eomkit/lineshapes.hpp"

namespace eomkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Maps fitted-parameter covariance onto reported quantities via `t` (report x params).
void fill_statistics(FitResult& out, const Eigen::MatrixXd& t, const Eigen::MatrixXd& cov) {
    const Eigen::Index k = out.values.size();
    if (cov.size() > 0 && cov.allFinite()) {
        out.covariance = t * cov * t.transpose();
    } else {
        out.covariance = Eigen::MatrixXd::Constant(k, k, kInf);
    }
    out.std_errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::ArrayXd scaled_axis(const Trace& t, double& center, double& half_span) {
    const double lo = t.x()[0];
    const double hi = t.x()[t.size() - 1];
    center = 0.5 * (lo + hi);
    half_span = 0.5 * (hi - lo);
    return (t.x() - center) / half_span;
}

double edge_mean(const Eigen::ArrayXd& y, bool left) {
    const Eigen::Index n = y.size();
    const Eigen::Index k = std::max<Eigen::Index>(3, n / 20);
    return left ? y.head(k).mean() : y.tail(k).mean();
}

/// Width of the excursion through `idx` measured at `level`; `above` selects
/// whether the excursion lies above (peak) or below (dip) that level.
double crossing_width(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, Eigen::Index idx, double level, bool above) {
    const auto inside = [&](Eigen::Index i) { return above ? y[i] > level : y[i] < level; };
    Eigen::Index l = idx;
    while (l > 0 && inside(l - 1)) --l;
    Eigen::Index r = idx;
    while (r + 1 < x.size() && inside(r + 1)) ++r;
    const double lo = l > 0 ? 0.5 * (x[l] + x[l - 1]) : x[l];
    const double hi = r + 1 < x.size() ? 0.5 * (x[r] + x[r + 1]) : x[r];
    const double cell = x.size() > 1 ? (x[x.size() - 1] - x[0]) / static_cast<double>(x.size() - 1) : 1.0;
    return std::max(hi - lo, 2.0 * cell);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

// FitResult -----------------------------------------------------------------

bool FitResult::has(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

Eigen::Index FitResult::index(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InvalidParameter("fit result has no parameter '" + name + "'");
    return static_cast<Eigen::Index>(it - names.begin());
}

double FitResult::value(const std::string& name) const { return values[index(name)]; }

double FitResult::error(const std::string& name) const { return std_errors[index(name)]; }

double FitResult::correlation(const std::string& a, const std::string& b) const {
    const auto i = index(a);
    const auto j = index(b);
    const double d = std::sqrt(covariance(i, i) * covariance(j, j));
    return d > 0.0 ? covariance(i, j) / d : 0.0;
}

std::string format_fit(const FitResult& fit) {
    std::ostringstream os;
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
        os << fit.names[i] << " = " << fmt(fit.values[static_cast<Eigen::Index>(i)]) << " +- "
           << fmt(fit.std_errors[static_cast<Eigen::Index>(i)]);
        if (i < fit.units.size() && !fit.units[i].empty()) os << ' ' << fit.units[i];
        os << '\n';
    }
    os << "residual_norm = " << fmt(fit.residual_norm) << '\n';
    os << "iterations = " << fit.iterations << '\n';
    os << "converged = " << (fit.converged ? "true" : "false") << '\n';
    for (const auto& f : fit.flags) os << "flag = " << f << '\n';
    return os.str();
}

// Optical dip -----------------------------------------------------------------

FitResult fit_optical_dip(const Trace& reflection) {
    if (reflection.size() < 8) throw InvalidParameter("dip fit needs at least 8 samples");
    double xc = 0.0;
    double s = 1.0;
    const Eigen::ArrayXd x = scaled_axis(reflection, xc, s);
    const Eigen::ArrayXd& y = reflection.y();
    const Eigen::Index n = x.size();

    const double baseline = 0.5 * (edge_mean(y, true) + edge_mean(y, false));
    Eigen::Index imin = 0;
    const double ymin = y.minCoeff(&imin);
    if (!(baseline > 0.0) || baseline - ymin < 0.05 * baseline) throw FitError("no reflection dip found");

    const double k0 = crossing_width(x, y, imin, 0.5 * (baseline + ymin), false);
    const double depth_ratio = std::clamp(ymin / baseline, 0.0, 1.0);
    const double u_mag = k0 * std::max(std::sqrt(depth_ratio), 1e-3);

    LeastSquaresProblem prob = models::reflection_dip(x, y);
    prob.typical = Eigen::Vector4d(k0, k0, k0, 1.0);

    SolverResult best;
    bool have = false;
    for (const double sign : {1.0, -1.0}) {
        Eigen::Vector4d p0(x[imin], k0, sign * u_mag, baseline);
        auto res = damped_gauss_newton(prob, p0);
        if (!have || (res.converged && !best.converged) ||
            (res.converged == best.converged && res.cost < best.cost)) {
            best = std::move(res);
            have = true;
        }
    }

    const Eigen::VectorXd& p = best.params;
    const double kappa = p[1] * s;
    const double u_abs = std::abs(p[2]) * s;
    const double su = p[2] >= 0.0 ? 1.0 : -1.0;

    FitResult out;
    out.names = {"f_o", "kappa_o", "kappa_oe_under", "kappa_oe_over", "scale"};
    out.units = {"Hz", "Hz", "Hz", "Hz", ""};
    out.values.resize(5);
    out.values << xc + p[0] * s, kappa, 0.5 * (kappa - u_abs), 0.5 * (kappa + u_abs), p[3];
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(5, 4);
    t(0, 0) = s;
    t(1, 1) = s;
    t(2, 1) = 0.5 * s;
    t(2, 2) = -0.5 * s * su;
    t(3, 1) = 0.5 * s;
    t(3, 2) = 0.5 * s * su;
    t(4, 3) = 1.0;
    fill_statistics(out, t, parameter_covariance(best));
    out.residual_norm = std::sqrt(best.residual.squaredNorm() / static_cast<double>(n));
    out.converged = best.converged;
    out.iterations = best.iterations;
    if (!out.converged) out.flags.push_back("not converged; estimates are best-effort");
    return out;
}

OpticalCavityFit select_branch(const FitResult& dip_fit, CouplingBranch branch) {
    OpticalCavityFit c;
    c.f_o = dip_fit.value("f_o");
    c.kappa_o = dip_fit.value("kappa_o");
    c.kappa_oe = dip_fit.value(branch == CouplingBranch::under ? "kappa_oe_under" : "kappa_oe_over");
    c.kappa_oi = c.kappa_o - c.kappa_oe;
    return c;
}

// Sideband phase ------------------------------------------------------------------

std::complex<double> sideband_beat_response(const DeviceParams& dev, double detuning, double f) {
    const auto r_sb = cavity_reflection(detuning + f, dev.kappa_o(), dev.kappa_oe());
    const auto r_pump = cavity_reflection(detuning, dev.kappa_o(), dev.kappa_oe());
    return r_sb * std::conj(r_pump);
}

FitResult fit_phase_detuning(const Trace& magnitude, const Trace& phase, const DeviceParams& dev) {
    const Eigen::Index n = phase.size();
    if (n < 8) throw InvalidParameter("phase fit needs at least 8 samples");
    if (magnitude.size() != n || !(magnitude.x() - phase.x()).isZero(0.0)) {
        throw InvalidParameter("magnitude and phase traces must share one frequency axis");
    }
    const Eigen::ArrayXd& f = phase.x();
    const Eigen::ArrayXd& phi = phase.y();
    const double kappa = dev.kappa_o();

    const auto wrap = [](double a) { return std::remainder(a, kTwoPi); };
    const auto model = [&](double detuning, double fi) { return std::arg(sideband_beat_response(dev, detuning, fi)); };
    const auto cost = [&](double detuning) {
        double c = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = wrap(model(detuning, f[i]) - phi[i]);
            c += r * r;
        }
        return c;
    };

    // Coarse search seeded by the magnitude dip, where the sideband meets the cavity.
    Eigen::Index imin = 0;
    magnitude.y().minCoeff(&imin);
    double best_det = -f[imin];
    double best_cost = cost(best_det);
    const double lo = -f[n - 1] - kappa;
    const double hi = -f[0] + kappa;
    const double step = kappa / 8.0;
    const auto count = std::min<long>(4000, static_cast<long>((hi - lo) / step) + 1);
    for (long k = 0; k < count; ++k) {
        const double d = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(std::max<long>(count - 1, 1));
        const double c = cost(d);
        if (c < best_cost) {
            best_cost = c;
            best_det = d;
        }
    }

    LeastSquaresProblem prob = models::sideband_phase(f, phi, dev);
    prob.typical = Eigen::VectorXd::Constant(1, 1e-3);
    auto res = damped_gauss_newton(prob, Eigen::VectorXd::Constant(1, best_det / kappa));

    FitResult out;
    out.names = {"detuning"};
    out.units = {"Hz"};
    out.values = Eigen::VectorXd::Constant(1, res.params[0] * kappa);
    Eigen::MatrixXd t = Eigen::MatrixXd::Constant(1, 1, kappa);
    fill_statistics(out, t, parameter_covariance(res));
    out.residual_norm = std::sqrt(res.residual.squaredNorm() / static_cast<double>(n));
    out.converged = res.converged;
    out.iterations = res.iterations;
    if (f[n - 1] - f[0] < kappa) out.flags.push_back("phase-wrap ambiguity: sweep span is below kappa_o");
    if (!out.converged) out.flags.push_back("not converged; estimates are best-effort");
    return out;
}

// Linewidth line ----------------------------------------------------------------------

FitResult fit_linewidth_vs_photons(const std::vector<LinewidthPoint>& points, Detuning sign, double kappa_o,
                                   const std::vector<double>& weights) {
    const auto m = static_cast<Eigen::Index>(points.size());
    if (m < 3) throw InvalidParameter("linewidth fit needs at least 3 points");
    if (!(kappa_o > 0.0)) throw InvalidParameter("kappa_o must be positive");
    if (!weights.empty() && weights.size() != points.size()) throw InvalidParameter("weights and points differ in length");

    Eigen::MatrixXd x(m, 2);
    Eigen::VectorXd y(m);
    Eigen::VectorXd w(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& pt = points[static_cast<std::size_t>(i)];
        x(i, 0) = 1.0;
        x(i, 1) = pt.n_c;
        y[i] = pt.gamma;
        w[i] = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
        if (!(w[i] > 0.0)) throw InvalidParameter("weights must be positive");
    }
    const double n_lo = x.col(1).minCoeff();
    const double n_hi = x.col(1).maxCoeff();
    if (!(n_hi - n_lo > 1e-12 * std::max(std::abs(n_hi), 1.0))) {
        throw FitError("rank-deficient design: all photon numbers are equal");
    }

    // Centre and scale the abscissa so the normal matrix is well conditioned.
    const double n_mid = 0.5 * (n_lo + n_hi);
    const double n_half = 0.5 * (n_hi - n_lo);
    Eigen::MatrixXd xs = x;
    xs.col(1) = (x.col(1).array() - n_mid) / n_half;
    const Eigen::MatrixXd xtw = xs.transpose() * w.asDiagonal();
    const Eigen::Matrix2d normal = xtw * xs;
    const Eigen::Vector2d beta_s = normal.ldlt().solve(xtw * y);
    const Eigen::VectorXd resid = y - xs * beta_s;
    const double s2 = (w.array() * resid.array().square()).sum() / static_cast<double>(m - 2);
    const Eigen::Matrix2d cov_s = s2 * normal.inverse();

    // Back to (intercept at n_c = 0, slope per photon).
    Eigen::Matrix2d back;
    back << 1.0, -n_mid / n_half, 0.0, 1.0 / n_half;
    const Eigen::Vector2d beta = back * beta_s;
    const Eigen::Matrix2d cov = back * cov_s * back.transpose();

    const double intercept = beta[0];
    const double slope = beta[1];
    const double se_slope = std::sqrt(std::max(cov(1, 1), 0.0));

    FitResult out;
    const bool wrong = (sign == Detuning::blue && slope > 0.0) || (sign == Detuning::red && slope < 0.0);
    if (wrong) {
        if (slope != 0.0 && std::abs(slope) > 2.0 * se_slope) {
            throw FitError("linewidth slope sign (" + fmt(slope) + " Hz per photon) contradicts " + to_string(sign) +
                           " detuning");
        }
        out.flags.push_back("slope sign opposes the declared detuning but is not significant");
    }

    const double g = std::sqrt(std::abs(slope) * kappa_o / 4.0);
    out.names = {"g_om", "gamma_mi", "slope"};
    out.units = {"Hz", "Hz", "Hz"};
    out.values = Eigen::Vector3d(g, intercept, slope);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(3, 2);
    t(1, 0) = 1.0;
    t(2, 1) = 1.0;
    if (g > 0.0) t(0, 1) = (slope >= 0.0 ? 1.0 : -1.0) * kappa_o / (8.0 * g);
    fill_statistics(out, t, cov);
    if (g == 0.0) {
        // One-sigma bound on the coupling implied by the slope uncertainty.
        out.std_errors[0] = std::sqrt(se_slope * kappa_o / 4.0);
        out.covariance(0, 0) = out.std_errors[0] * out.std_errors[0];
    }
    out.residual_norm = std::sqrt(resid.squaredNorm() / static_cast<double>(m));
    out.converged = true;
    return out;
}

// Multi-Lorentzian ------------------------------------------------------------

namespace {

/// Peak parameters are (center, fwhm, area) triplets in scaled units,
/// followed by `n_bg` background coefficients.
struct LorentzModel {
    Eigen::ArrayXd x;
    Eigen::ArrayXd y;
    Eigen::ArrayXd sqrt_w;
    int n_peaks;
    int n_bg;

    Eigen::VectorXd residual(const Eigen::VectorXd& p) const {
        Eigen::ArrayXd m = Eigen::ArrayXd::Zero(x.size());
        for (int j = 0; j < n_peaks; ++j) {
            const double c = p[3 * j];
            const double hw = 0.5 * p[3 * j + 1];
            const double a = p[3 * j + 2];
            m += a * hw / (kPi * ((x - c).square() + hw * hw));
        }
        if (n_bg >= 1) m += p[3 * n_peaks];
        if (n_bg >= 2) m += p[3 * n_peaks + 1] * x;
        return ((m - y) * sqrt_w).matrix();
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
        Eigen::MatrixXd j(x.size(), 3 * n_peaks + n_bg);
        for (int k = 0; k < n_peaks; ++k) {
            const double c = p[3 * k];
            const double w = p[3 * k + 1];
            const double hw = 0.5 * w;
            const double a = p[3 * k + 2];
            const Eigen::ArrayXd d = x - c;
            const Eigen::ArrayXd q = d.square() + hw * hw;
            j.col(3 * k) = (a * hw / kPi * 2.0 * d / q.square() * sqrt_w).matrix();
            j.col(3 * k + 1) = (a / (2.0 * kPi) * (d.square() - hw * hw) / q.square() * sqrt_w).matrix();
            j.col(3 * k + 2) = (hw / (kPi * q) * sqrt_w).matrix();
        }
        if (n_bg >= 1) j.col(3 * n_peaks) = sqrt_w.matrix();
        if (n_bg >= 2) j.col(3 * n_peaks + 1) = (x * sqrt_w).matrix();
        return j;
    }

    LeastSquaresProblem problem() const {
        LeastSquaresProblem prob;
        auto self = std::make_shared<const LorentzModel>(*this);
        prob.residual = [self](const Eigen::VectorXd& p) { return self->residual(p); };
        prob.jacobian = [self](const Eigen::VectorXd& p) { return self->jacobian(p); };
        const int np = n_peaks;
        prob.feasible = [np](const Eigen::VectorXd& p) {
            for (int k = 0; k < np; ++k) {
                if (!(p[3 * k + 1] > 0.0)) return false;
            }
            return true;
        };
        prob.typical = Eigen::VectorXd::Constant(3 * n_peaks + n_bg, 1e-3);
        return prob;
    }
};

}  // namespace

FitResult fit_lorentzian_multi(const Trace& trace, int n_peaks, const Background& background,
                               const Eigen::ArrayXd& weights) {
    if (n_peaks < 0) throw InvalidParameter("n_peaks must be non-negative");
    const Eigen::Index n = trace.size();
    if (n < 3 * n_peaks + 4) throw InvalidParameter("trace too short for the requested number of peaks");
    if (weights.size() != 0 && weights.size() != n) throw InvalidParameter("weights must match the trace length");

    double xc = 0.0;
    double xs = 1.0;
    const Eigen::ArrayXd x = scaled_axis(trace, xc, xs);
    Eigen::ArrayXd yraw = trace.y();
    int n_bg = 1;
    if (std::holds_alternative<LinearBackground>(background)) n_bg = 2;
    if (const auto* ref = std::get_if<ReferenceBackground>(&background)) {
        yraw -= interpolate(ref->reference, trace.x());
        n_bg = 0;
    }
    const double ys = std::max(yraw.abs().maxCoeff(), std::numeric_limits<double>::min());
    const Eigen::ArrayXd y = yraw / ys;
    const Eigen::ArrayXd w = weights.size() == n ? weights : Eigen::ArrayXd::Ones(n);
    if ((w < 0.0).any()) throw InvalidParameter("weights must be non-negative");
    const Eigen::ArrayXd sqrt_w = w.sqrt();

    // Background seed from the trace edges.
    const double left = edge_mean(y, true);
    const double right = edge_mean(y, false);
    Eigen::VectorXd bg0(n_bg);
    Eigen::ArrayXd bg_curve = Eigen::ArrayXd::Zero(n);
    if (n_bg == 1) {
        bg0[0] = std::min(left, right);
        bg_curve.setConstant(bg0[0]);
    } else if (n_bg == 2) {
        bg0[0] = 0.5 * (left + right);
        bg0[1] = 0.5 * (right - left);
        bg_curve = bg0[0] + bg0[1] * x;
    }

    // Iterative peak picking: strongest residual, local fit, subtract.
    Eigen::VectorXd p0(3 * n_peaks + n_bg);
    Eigen::ArrayXd resid = y - bg_curve;
    for (int j = 0; j < n_peaks; ++j) {
        Eigen::Index imax = 0;
        (resid * (w > 0.0).cast<double>() - (w <= 0.0).cast<double>() * 1e300).maxCoeff(&imax);
        const double h = std::max(resid[imax], 1e-12);
        const double width = crossing_width(x, resid, imax, 0.5 * h, true);
        Eigen::Vector3d seed(x[imax], width, 0.5 * kPi * h * width);

        // Local refinement inside a few widths of the pick.
        const double lo = x[imax] - 5.0 * width;
        const double hi = x[imax] + 5.0 * width;
        Eigen::ArrayXd local_w = w * ((x >= lo) && (x <= hi)).cast<double>();
        const Eigen::ArrayXd local_sw = local_w.sqrt();
        if ((local_w > 0.0).count() >= 4) {
            const LorentzModel local{x, resid, local_sw, 1, 0};
            auto res = damped_gauss_newton(local.problem(), seed, SolverOptions{50, 1e-6, 1e-3});
            if (res.params.allFinite() && res.params[1] > 0.0) seed = res.params;
        }
        p0.segment<3>(3 * j) = seed;
        const double hw = 0.5 * seed[1];
        resid -= seed[2] * hw / (kPi * ((x - seed[0]).square() + hw * hw));
    }
    p0.tail(n_bg) = bg0;

    const LorentzModel model{x, y, sqrt_w, n_peaks, n_bg};
    auto res = damped_gauss_newton(model.problem(), p0);

    // Sort peaks by center.
    std::vector<int> order(static_cast<std::size_t>(n_peaks));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return res.params[3 * a] < res.params[3 * b]; });

    const Eigen::Index np = 3 * n_peaks + n_bg;
    FitResult out;
    out.values.resize(np);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(np, np);
    for (int j = 0; j < n_peaks; ++j) {
        const int src = order[static_cast<std::size_t>(j)];
        const std::string id = std::to_string(j);
        out.names.insert(out.names.end(), {"f_" + id, "gamma_" + id, "area_" + id});
        out.units.insert(out.units.end(), {"Hz", "Hz", ""});
        out.values[3 * j] = xc + res.params[3 * src] * xs;
        out.values[3 * j + 1] = res.params[3 * src + 1] * xs;
        out.values[3 * j + 2] = res.params[3 * src + 2] * ys * xs;
        t(3 * j, 3 * src) = xs;
        t(3 * j + 1, 3 * src + 1) = xs;
        t(3 * j + 2, 3 * src + 2) = ys * xs;
    }
    if (n_bg >= 1) {
        out.names.push_back("bg_offset");
        out.units.push_back("");
        // Offset referred to the trace midpoint.
        out.values[3 * n_peaks] = res.params[3 * n_peaks] * ys;
        t(3 * n_peaks, 3 * n_peaks) = ys;
    }
    if (n_bg >= 2) {
        out.names.push_back("bg_slope");
        out.units.push_back("per Hz");
        out.values[3 * n_peaks + 1] = res.params[3 * n_peaks + 1] * ys / xs;
        t(3 * n_peaks + 1, 3 * n_peaks + 1) = ys / xs;
    }
    fill_statistics(out, t, parameter_covariance(res));

    const double wsum = std::max(w.sum(), 1.0);
    out.residual_norm = ys * std::sqrt(res.residual.squaredNorm() / wsum);
    out.converged = res.converged;
    out.iterations = res.iterations;
    if (!out.converged) out.flags.push_back("not converged; estimates are best-effort");
    for (int j = 0; j < n_peaks; ++j) {
        for (int k = 0; k < 3; ++k) {
            const double se = out.std_errors[3 * j + k];
            if (!(se < std::abs(out.values[3 * j + k]))) {
                out.flags.push_back("peak " + std::to_string(j) + " is poorly determined (covariance blow-up)");
                break;
            }
        }
    }
    return out;
}

std::vector<LorentzPeak> lorentz_peaks(const FitResult& fit) {
    std::vector<LorentzPeak> peaks;
    for (int j = 0;; ++j) {
        const std::string id = std::to_string(j);
        if (!fit.has("f_" + id)) break;
        peaks.push_back({fit.value("f_" + id), fit.value("gamma_" + id), fit.value("area_" + id)});
    }
    return peaks;
}


// Model problems -------------------------------------------------------------------

namespace models {

LeastSquaresProblem reflection_dip(Eigen::ArrayXd x, Eigen::ArrayXd y) {
    auto data = std::make_shared<const std::pair<Eigen::ArrayXd, Eigen::ArrayXd>>(std::move(x), std::move(y));
    LeastSquaresProblem prob;
    prob.residual = [data](const Eigen::VectorXd& p) {
        const auto& [x, y] = *data;
        Eigen::VectorXd r(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double d = x[i] - p[0];
            const double dd = 4.0 * d * d;
            r[i] = p[3] * (p[2] * p[2] + dd) / (p[1] * p[1] + dd) - y[i];
        }
        return r;
    };
    prob.jacobian = [data](const Eigen::VectorXd& p) {
        const auto& x = data->first;
        Eigen::MatrixXd j(x.size(), 4);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double d = x[i] - p[0];
            const double dd = 4.0 * d * d;
            const double num = p[2] * p[2] + dd;
            const double den = p[1] * p[1] + dd;
            j(i, 0) = p[3] * 8.0 * d * (num - den) / (den * den);
            j(i, 1) = -p[3] * num * 2.0 * p[1] / (den * den);
            j(i, 2) = p[3] * 2.0 * p[2] / den;
            j(i, 3) = num / den;
        }
        return j;
    };
    prob.feasible = [](const Eigen::VectorXd& p) { return p[1] > 0.0; };
    prob.typical = Eigen::Vector4d::Ones();
    return prob;
}

LeastSquaresProblem sideband_phase(Eigen::ArrayXd f, Eigen::ArrayXd phase, const DeviceParams& dev) {
    struct Data {
        Eigen::ArrayXd f;
        Eigen::ArrayXd phase;
        DeviceParams dev;
    };
    auto data = std::make_shared<const Data>(Data{std::move(f), std::move(phase), dev});
    LeastSquaresProblem prob;
    prob.residual = [data](const Eigen::VectorXd& p) {
        const double kappa = data->dev.kappa_o();
        Eigen::VectorXd r(data->f.size());
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            const double model = std::arg(sideband_beat_response(data->dev, p[0] * kappa, data->f[i]));
            r[i] = std::remainder(model - data->phase[i], kTwoPi);
        }
        return r;
    };
    prob.jacobian = [data](const Eigen::VectorXd& p) {
        const double kappa = data->dev.kappa_o();
        const double kappa_e = data->dev.kappa_oe();
        // d arg r(delta) / d delta for the single-pole reflection.
        const auto dargr = [&](double delta) {
            const std::complex<double> den(kappa, 2.0 * delta);
            const std::complex<double> dr = std::complex<double>(0.0, 4.0 * kappa_e) / (den * den);
            return std::imag(dr / cavity_reflection(delta, kappa, kappa_e));
        };
        const double d = p[0] * kappa;
        const double ref = dargr(d);
        Eigen::MatrixXd j(data->f.size(), 1);
        for (Eigen::Index i = 0; i < j.rows(); ++i) j(i, 0) = kappa * (dargr(d + data->f[i]) - ref);
        return j;
    };
    prob.typical = Eigen::VectorXd::Constant(1, 1e-3);
    return prob;
}

LeastSquaresProblem lorentz_sum(Eigen::ArrayXd x, Eigen::ArrayXd y, Eigen::ArrayXd sqrt_w, int n_peaks, int n_bg) {
    return LorentzModel{std::move(x), std::move(y), std::move(sqrt_w), n_peaks, n_bg}.problem();
}

}  // namespace models

}  // namespace eomkit
