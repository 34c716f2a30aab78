#ifndef RESQ_LEVENBERG_MARQUARDT_HPP
#define RESQ_LEVENBERG_MARQUARDT_HPP

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace resq::lm
{

// Fills `residuals` (pre-sized to the problem's residual count) for `params`.
using ResidualFn = std::function<void(const Eigen::VectorXd &params, Eigen::VectorXd &residuals)>;

struct Options
{
    int max_iterations = 200;
    double rel_cost_tol = 1e-12;
    double gradient_tol = 1e-10;
    double jacobian_rel_step = 1e-6;
    double initial_damping = 1e-3;
};

struct Result
{
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian; // at `params`
    double cost = 0.0;        // 0.5 * sum r^2
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;
};

/// Forward-difference Jacobian; step for parameter j is rel_step * max(|p_j|, 1).
Eigen::MatrixXd numeric_jacobian(const ResidualFn &fn, const Eigen::VectorXd &params,
                                 const Eigen::VectorXd &residuals, double rel_step);

/// Minimises 0.5 ||r(p)||^2. Damping follows the gain-ratio rule with
/// Marquardt diagonal scaling. Stops on relative cost change below
/// rel_cost_tol, gradient infinity-norm below gradient_tol, or exact zero cost.
/// Every trial step counts toward max_iterations.
Result minimize(const ResidualFn &fn, Eigen::VectorXd initial, Eigen::Index n_residuals,
                const Options &options = {});

/// (J^T J)^{-1} scaled by `variance`. Parameters the Jacobian does not
/// constrain get infinite variance.
Eigen::MatrixXd covariance(const Eigen::MatrixXd &jacobian, double variance);

} // namespace resq::lm

#endif
