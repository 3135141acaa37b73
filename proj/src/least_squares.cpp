#include "eomkit/least_squares.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "eomkit/errors.hpp"

namespace eomkit {

namespace {

double relative_step(const Eigen::VectorXd& step, const Eigen::VectorXd& p, const Eigen::VectorXd& typical) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double floor = typical.size() == p.size() ? typical[i] : 0.0;
        const double denom = std::max(std::abs(p[i]), floor);
        const double r = denom > 0.0 ? std::abs(step[i]) / denom : std::abs(step[i]);
        worst = std::max(worst, r);
    }
    return worst;
}

}  // namespace

SolverResult damped_gauss_newton(const LeastSquaresProblem& problem, Eigen::VectorXd p0,
                                 const SolverOptions& options) {
    if (!problem.residual || !problem.jacobian) throw InvalidParameter("least-squares problem is incomplete");

    SolverResult out;
    out.params = std::move(p0);
    out.residual = problem.residual(out.params);
    out.cost = 0.5 * out.residual.squaredNorm();
    out.jacobian = problem.jacobian(out.params);
    if (!std::isfinite(out.cost)) throw FitError("initial guess gives a non-finite residual");

    const Eigen::Index n = out.params.size();
    if (n == 0) {
        out.converged = true;
        return out;
    }

    double lambda = options.initial_damping;
    for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
        if (out.cost == 0.0) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd jtj = out.jacobian.transpose() * out.jacobian;
        const Eigen::VectorXd grad = out.jacobian.transpose() * out.residual;

        Eigen::VectorXd diag = jtj.diagonal();
        const double floor = std::max(diag.maxCoeff(), 1.0) * 1e-12;
        diag = diag.cwiseMax(floor);

        Eigen::MatrixXd lhs = jtj;
        lhs.diagonal() += lambda * diag;
        const Eigen::VectorXd step = lhs.ldlt().solve(-grad);
        const double rel = relative_step(step, out.params, problem.typical);

        const Eigen::VectorXd trial = out.params + step;
        bool accepted = false;
        if (step.allFinite() && (!problem.feasible || problem.feasible(trial))) {
            Eigen::VectorXd r = problem.residual(trial);
            const double cost = 0.5 * r.squaredNorm();
            if (std::isfinite(cost) && cost < out.cost) {
                out.params = trial;
                out.residual = std::move(r);
                out.cost = cost;
                out.jacobian = problem.jacobian(out.params);
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
            }
        }
        // A rejected step only signals convergence while damping is mild; under
        // heavy damping steps shrink without the iterate being stationary.
        if (rel < options.step_tolerance && (accepted || lambda <= 1.0)) {
            out.converged = true;
            if (accepted) ++out.iterations;
            break;
        }
        if (!accepted) {
            lambda *= 10.0;
            if (lambda > 1e16) {
                // No descent direction left at working precision.
                out.converged = true;
                break;
            }
        }
    }
    return out;
}

Eigen::MatrixXd parameter_covariance(const SolverResult& result) {
    const Eigen::Index m = result.residual.size();
    const Eigen::Index n = result.params.size();
    if (n == 0) return Eigen::MatrixXd(0, 0);
    const Eigen::MatrixXd jtj = result.jacobian.transpose() * result.jacobian;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
    if (cod.rank() < n) {
        return Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
    }
    const double dof = static_cast<double>(std::max<Eigen::Index>(m - n, 1));
    const double s2 = result.residual.squaredNorm() / dof;
    return s2 * cod.pseudoInverse();
}

}  // namespace eomkit
