#pragma once

#include <Eigen/Core>
#include <functional>

namespace eomkit {

/// Nonlinear least-squares problem min 0.5 |r(p)|^2 with an analytic Jacobian.
struct LeastSquaresProblem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
    /// Optional domain check; infeasible trial steps are rejected like uphill ones.
    std::function<bool(const Eigen::VectorXd&)> feasible;
    /// Per-parameter magnitude floor used by the relative-step test.
    Eigen::VectorXd typical;
};

struct SolverOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-8;
    double initial_damping = 1e-3;
};

struct SolverResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residual;
    Eigen::MatrixXd jacobian;
    double cost = 0.0;  // 0.5 |r|^2
    int iterations = 0;
    bool converged = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal scaling).
SolverResult damped_gauss_newton(const LeastSquaresProblem& problem, Eigen::VectorXd p0,
                                 const SolverOptions& options = {});

/// s^2 (J^T J)^-1 with s^2 = |r|^2 / (m - n). Entries are +inf where J^T J is singular.
Eigen::MatrixXd parameter_covariance(const SolverResult& result);

}  // namespace eomkit
