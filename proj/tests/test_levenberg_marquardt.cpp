#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resq/levenberg_marquardt.hpp"

#include <cmath>
#include <limits>

using namespace resq;
using Eigen::VectorXd;

TEST_CASE("rosenbrock")
{
    const lm::ResidualFn fn = [](const VectorXd &p, VectorXd &r) {
        r[0] = 10.0 * (p[1] - p[0] * p[0]);
        r[1] = 1.0 - p[0];
    };
    VectorXd p0(2);
    p0 << -1.2, 1.0;
    const lm::Result res = lm::minimize(fn, p0, 2);
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.params[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.iterations <= 200);
}

TEST_CASE("exponential decay fit and covariance")
{
    const int n = 40;
    VectorXd t(n), y(n);
    for (int i = 0; i < n; ++i)
    {
        t[i] = 0.1 * i;
        y[i] = 2.5 * std::exp(-1.3 * t[i]) + 0.01 * std::sin(7.0 * i);
    }
    const lm::ResidualFn fn = [&](const VectorXd &p, VectorXd &r) {
        for (int i = 0; i < n; ++i)
            r[i] = p[0] * std::exp(-p[1] * t[i]) - y[i];
    };
    VectorXd p0(2);
    p0 << 1.0, 0.5;
    const lm::Result res = lm::minimize(fn, p0, n);
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(2.5).epsilon(0.02));
    CHECK(res.params[1] == doctest::Approx(1.3).epsilon(0.02));

    // analytic Jacobian at the optimum as the covariance oracle
    Eigen::MatrixXd J(n, 2);
    for (int i = 0; i < n; ++i)
    {
        J(i, 0) = std::exp(-res.params[1] * t[i]);
        J(i, 1) = -res.params[0] * t[i] * std::exp(-res.params[1] * t[i]);
    }
    const Eigen::MatrixXd expected = (J.transpose() * J).inverse() * 0.3;
    const Eigen::MatrixXd got = lm::covariance(res.jacobian, 0.3);
    CHECK((got - expected).norm() / expected.norm() < 1e-4);
}

TEST_CASE("numeric jacobian step")
{
    const lm::ResidualFn fn = [](const VectorXd &p, VectorXd &r) {
        r[0] = p[0] * p[0];
        r[1] = std::sin(p[1]);
    };
    VectorXd p(2), r(2);
    p << 3.0, 0.2;
    fn(p, r);
    const Eigen::MatrixXd J = lm::numeric_jacobian(fn, p, r, 1e-6);
    CHECK(J(0, 0) == doctest::Approx(6.0).epsilon(1e-5));
    CHECK(J(1, 1) == doctest::Approx(std::cos(0.2)).epsilon(1e-5));
    CHECK(J(0, 1) == 0.0);
}

TEST_CASE("exact zero residual stops immediately")
{
    const lm::ResidualFn fn = [](const VectorXd &p, VectorXd &r) { r[0] = p[0] - 4.0; };
    VectorXd p0(1);
    p0 << 4.0;
    const lm::Result res = lm::minimize(fn, p0, 1);
    CHECK(res.converged);
    CHECK(res.cost == 0.0);
}

TEST_CASE("unconstrained parameter gets infinite variance")
{
    Eigen::MatrixXd J(3, 2);
    J << 1, 0, 2, 0, 3, 0;
    const Eigen::MatrixXd cov = lm::covariance(J, 1.0);
    CHECK(cov(0, 0) == doctest::Approx(1.0 / 14.0));
    CHECK(std::isinf(cov(1, 1)));
}

TEST_CASE("iteration cap")
{
    const lm::ResidualFn fn = [](const VectorXd &p, VectorXd &r) {
        r[0] = 10.0 * (p[1] - p[0] * p[0]);
        r[1] = 1.0 - p[0];
    };
    VectorXd p0(2);
    p0 << -1.2, 1.0;
    lm::Options opt;
    opt.max_iterations = 3;
    const lm::Result res = lm::minimize(fn, p0, 2, opt);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 3);
}
