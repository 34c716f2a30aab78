#include "resq/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace resq::lm
{

Eigen::MatrixXd numeric_jacobian(const ResidualFn &fn, const Eigen::VectorXd &params,
                                 const Eigen::VectorXd &residuals, double rel_step)
{
    const Eigen::Index n = params.size();
    Eigen::MatrixXd jac(residuals.size(), n);
    Eigen::VectorXd shifted = params;
    Eigen::VectorXd r_step(residuals.size());
    for (Eigen::Index j = 0; j < n; ++j)
    {
        const double h = rel_step * std::max(std::abs(params[j]), 1.0);
        shifted[j] = params[j] + h;
        const double actual = shifted[j] - params[j];
        fn(shifted, r_step);
        jac.col(j) = (r_step - residuals) / actual;
        shifted[j] = params[j];
    }
    return jac;
}

namespace
{
bool all_finite(const Eigen::VectorXd &v)
{
    return v.allFinite();
}
} // namespace

Result minimize(const ResidualFn &fn, Eigen::VectorXd initial, Eigen::Index n_residuals,
                const Options &options)
{
    Result out;
    out.params = std::move(initial);
    out.residuals.resize(n_residuals);
    fn(out.params, out.residuals);
    if (!all_finite(out.residuals))
    {
        out.cost = std::numeric_limits<double>::infinity();
        out.stop_reason = "non-finite residuals at the initial point";
        return out;
    }
    out.cost = 0.5 * out.residuals.squaredNorm();
    out.jacobian = numeric_jacobian(fn, out.params, out.residuals, options.jacobian_rel_step);

    Eigen::MatrixXd hessian = out.jacobian.transpose() * out.jacobian;
    Eigen::VectorXd gradient = out.jacobian.transpose() * out.residuals;

    auto finish = [&](bool converged, const char *reason) {
        out.converged = converged;
        out.stop_reason = reason;
        return out;
    };

    if (out.cost == 0.0)
        return finish(true, "zero cost");
    if (gradient.lpNorm<Eigen::Infinity>() < options.gradient_tol)
        return finish(true, "gradient tolerance");

    double damping = options.initial_damping * std::max(hessian.diagonal().maxCoeff(), 1e-300);
    double growth = 2.0;
    Eigen::VectorXd trial(out.params.size());
    Eigen::VectorXd r_trial(n_residuals);

    while (out.iterations < options.max_iterations)
    {
        ++out.iterations;
        const double diag_floor = 1e-12 * std::max(hessian.diagonal().maxCoeff(), 1e-300);
        Eigen::VectorXd scale = hessian.diagonal().cwiseMax(diag_floor);
        Eigen::MatrixXd system = hessian;
        system.diagonal() += damping * scale;
        Eigen::VectorXd step = system.ldlt().solve(-gradient);

        bool accepted = false;
        double decrease = 0.0;
        if (all_finite(step))
        {
            trial = out.params + step;
            fn(trial, r_trial);
            if (all_finite(r_trial))
            {
                const double trial_cost = 0.5 * r_trial.squaredNorm();
                decrease = out.cost - trial_cost;
                const double predicted =
                    0.5 * step.dot(damping * scale.cwiseProduct(step) - gradient);
                if (decrease > 0.0 && predicted > 0.0)
                {
                    const double rho = decrease / predicted;
                    const double previous_cost = out.cost;
                    out.params = trial;
                    out.residuals = r_trial;
                    out.cost = trial_cost;
                    out.jacobian =
                        numeric_jacobian(fn, out.params, out.residuals, options.jacobian_rel_step);
                    hessian = out.jacobian.transpose() * out.jacobian;
                    gradient = out.jacobian.transpose() * out.residuals;
                    const double t = 2.0 * rho - 1.0;
                    damping *= std::max(1.0 / 3.0, 1.0 - t * t * t);
                    growth = 2.0;
                    accepted = true;

                    if (out.cost == 0.0)
                        return finish(true, "zero cost");
                    if (decrease <= options.rel_cost_tol * previous_cost)
                        return finish(true, "relative cost change");
                    if (gradient.lpNorm<Eigen::Infinity>() < options.gradient_tol)
                        return finish(true, "gradient tolerance");
                }
                else if (std::abs(decrease) <= options.rel_cost_tol * out.cost)
                {
                    return finish(true, "relative cost change");
                }
            }
        }
        if (!accepted)
        {
            damping *= growth;
            growth *= 2.0;
            if (!std::isfinite(damping) || damping > 1e300)
                return finish(false, "damping overflow");
        }
    }
    return finish(false, "iteration limit");
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd &jacobian, double variance)
{
    const Eigen::Index n = jacobian.cols();
    const Eigen::MatrixXd hessian = jacobian.transpose() * jacobian;
    Eigen::VectorXd scale(n);
    for (Eigen::Index j = 0; j < n; ++j)
    {
        const double d = hessian(j, j);
        scale[j] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    const Eigen::MatrixXd scaled = scale.asDiagonal() * hessian * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
    const Eigen::VectorXd &lambda = eig.eigenvalues();
    const Eigen::MatrixXd &vecs = eig.eigenvectors();
    const double lambda_max = std::max(lambda.maxCoeff(), 0.0);

    Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(n, n);
    std::vector<bool> unconstrained(static_cast<std::size_t>(n), false);
    for (Eigen::Index k = 0; k < n; ++k)
    {
        if (lambda[k] > 1e-14 * lambda_max && lambda_max > 0.0)
        {
            inv += vecs.col(k) * vecs.col(k).transpose() / lambda[k];
        }
        else
        {
            for (Eigen::Index j = 0; j < n; ++j)
                if (std::abs(vecs(j, k)) > 1e-6)
                    unconstrained[static_cast<std::size_t>(j)] = true;
        }
    }
    Eigen::MatrixXd cov = scale.asDiagonal() * inv * scale.asDiagonal() * variance;
    const double inf = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
    {
        if (scale[j] == 0.0 || unconstrained[static_cast<std::size_t>(j)])
        {
            cov.row(j).setConstant(0.0);
            cov.col(j).setConstant(0.0);
            cov(j, j) = inf;
        }
    }
    return cov;
}

} // namespace resq::lm
