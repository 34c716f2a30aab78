#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resq/core.hpp"
#include "resq/cpw_design.hpp"
#include "resq/errors.hpp"

#include <cmath>

using namespace resq;
using namespace resq::cpw;

namespace
{

// Composite Simpson on the trigonometric form of K(k).
double k_quadrature(double k, int n = 20000)
{
    const double h = (kPi / 2) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i)
    {
        const double t = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w / std::sqrt(1.0 - k * k * std::sin(t) * std::sin(t));
    }
    return s * h / 3.0;
}

// Root of w - 1/sqrt(L (C + 2 C*(w))) by bisection.
double coupled_by_bisection(const CouplingDesign &c)
{
    auto g = [&](double w) {
        const double cstar = c.c_k / (1.0 + w * w * c.c_k * c.c_k * c.r_load * c.r_load);
        return w - 1.0 / std::sqrt(c.l_equiv_n * (c.c_equiv + 2.0 * cstar));
    };
    const double w0 = 1.0 / std::sqrt(c.l_equiv_n * c.c_equiv);
    double lo = 0.5 * w0, hi = w0;
    for (int i = 0; i < 200; ++i)
    {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi) / (2.0 * kPi);
}

} // namespace

TEST_CASE("elliptic K against quadrature")
{
    CHECK(elliptic_k(0.0) == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(elliptic_k(0.5) == doctest::Approx(1.6857503548126107).epsilon(1e-12));
    CHECK(elliptic_k(0.8660254) == doctest::Approx(2.156515635754643).epsilon(1e-10));
    for (double k = 0.05; k < 0.96; k += 0.05)
        CHECK(elliptic_k(k) == doctest::Approx(k_quadrature(k)).epsilon(1e-10));
    CHECK_THROWS_AS(elliptic_k(1.0), Error);
    CHECK_THROWS_AS(elliptic_k(-0.1), Error);
}

TEST_CASE("line parameters of the reference geometry")
{
    const LineParameters line = line_parameters(15e-6, 7.5e-6, 11.68);
    CHECK(line.z0 == doctest::Approx(47.9).epsilon(0.1 / 47.9));
    CHECK(line.z0 == doctest::Approx(47.88349615941309).epsilon(1e-9));
    CHECK(line.eps_eff == doctest::Approx(6.34).epsilon(1e-12));
    CHECK(line.z0 == doctest::Approx(std::sqrt(line.l_per_len / line.c_per_len)).epsilon(1e-9));
    CHECK(line.phase_velocity() == doctest::Approx(1.0 / std::sqrt(line.l_per_len * line.c_per_len)).epsilon(1e-9));
    CHECK(line.phase_velocity() == doctest::Approx(PhysicalConstants::c0 / std::sqrt(6.34)).epsilon(1e-9));

    CHECK(line_parameters(3e-6, 1e-6, 1.0).eps_eff == 1.0);

    const double k = 10.0 / 22.0;
    const double z0_oracle = 30.0 * kPi / std::sqrt(6.34) * k_quadrature(std::sqrt(1 - k * k)) / k_quadrature(k);
    CHECK(line_parameters(10e-6, 6e-6, 11.68).z0 == doctest::Approx(z0_oracle).epsilon(1e-9));
    CHECK(z0_oracle == doctest::Approx(50.473394665006154).epsilon(1e-9));
}

TEST_CASE("z0 decreases with k")
{
    double prev = 1e9;
    for (double k = 0.1; k <= 0.9001; k += 0.02)
    {
        const double s = 10e-6;
        const double g = s * (1.0 / k - 1.0) / 2.0;
        const double z0 = line_parameters(s, g, 11.68).z0;
        CHECK(z0 < prev);
        prev = z0;
    }
}

TEST_CASE("quarter-wave frequencies")
{
    const LineParameters line = line_parameters(15e-6, 7.5e-6, 11.68);
    const double f1 = uncoupled_quarterwave_freq(line, 5.957e-3, 1);
    CHECK(f1 == doctest::Approx(5.0e9).epsilon(0.005));
    CHECK(uncoupled_quarterwave_freq(line, 5.957e-3, 2) == doctest::Approx(3.0 * f1).epsilon(1e-14));
    const LineParameters vac = line_parameters(10e-6, 5e-6, 1.0);
    CHECK(uncoupled_quarterwave_freq(vac, PhysicalConstants::c0 / 4e9, 1) == doctest::Approx(1e9).epsilon(1e-14));
    const double ell = quarterwave_length_for(line, 5e9, 1);
    CHECK(ell == doctest::Approx(5.96e-3).epsilon(0.002));
    CHECK(uncoupled_quarterwave_freq(line, ell, 1) == doctest::Approx(5e9).epsilon(1e-14));
}

TEST_CASE("coupled resonance")
{
    const LineParameters line = line_parameters(15e-6, 7.5e-6, 11.68);
    const double ell = 5.957e-3;
    const CouplingDesign none = make_coupling(line, ell, 1, 0.0, 50.0);
    CHECK(none.c_equiv == line.c_per_len * ell / 2.0);
    CHECK(none.l_equiv_n == 2.0 * line.l_per_len * ell / (kPi * kPi));
    CHECK(coupled_resonance(none) == doctest::Approx(lumped_uncoupled_freq(none)).epsilon(1e-14));

    const CouplingDesign c = make_coupling(line, ell, 1, 15.6e-15, 50.0);
    const double f = coupled_resonance(c);
    CHECK(f < lumped_uncoupled_freq(c));
    CHECK(f == doctest::Approx(coupled_by_bisection(c)).epsilon(1e-11));

    const CouplingDesign c2 = make_coupling(line, ell, 1, 31.2e-15, 50.0);
    CHECK(coupled_resonance(c2) < f);
    CHECK(coupled_resonance(c2) == doctest::Approx(coupled_by_bisection(c2)).epsilon(1e-11));

    double prev_gap = 1.0;
    for (double ck : {10e-15, 1e-15, 0.1e-15})
    {
        const CouplingDesign cc = make_coupling(line, ell, 1, ck, 50.0);
        const double gap = 1.0 - coupled_resonance(cc) / lumped_uncoupled_freq(cc);
        CHECK(gap > 0.0);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-3);

    const double fq = quarterwave_coupled_freq(line, ell, 1, 15.6e-15, 50.0);
    CHECK(fq / uncoupled_quarterwave_freq(line, ell, 1) ==
          doctest::Approx(f / lumped_uncoupled_freq(c)).epsilon(1e-12));
    CHECK(quarterwave_coupled_freq(line, ell, 1, 0.0, 50.0) ==
          doctest::Approx(uncoupled_quarterwave_freq(line, ell, 1)).epsilon(1e-14));
}

TEST_CASE("norton capacitance uses the coupling capacitor")
{
    CHECK(norton_capacitance(15e-15, 50.0, 0.0) == 15e-15);
    const double w = 2 * kPi * 5e9;
    CHECK(norton_capacitance(15e-15, 50.0, w) ==
          doctest::Approx(15e-15 / (1 + w * w * 15e-15 * 15e-15 * 2500)).epsilon(1e-15));
}

TEST_CASE("external Q")
{
    const LineParameters line = line_parameters(15e-6, 7.5e-6, 11.68);
    const CouplingDesign c = make_coupling(line, 5.957e-3, 1, 15.557e-15, 50.0);
    const double w = 2 * kPi * 5e9;
    const ExternalQ q = external_q(c, w);
    CHECK(q.loading_term == doctest::Approx(6.0e-4).epsilon(0.01));
    CHECK(q.loading_term == doctest::Approx(w * w * 15.557e-15 * 15.557e-15 * 2500).epsilon(1e-14));
    CHECK(q.exact / q.approximate == doctest::Approx(1.0006).epsilon(1e-4));
    CHECK(q.exact / q.approximate == doctest::Approx(1.0 + q.loading_term).epsilon(1e-14));
    CHECK(q.approximate == doctest::Approx(c.c_equiv / (2 * w * 15.557e-15 * 15.557e-15 * 50.0)).epsilon(1e-14));

    const CouplingDesign c2 = make_coupling(line, 5.957e-3, 1, 2 * 15.557e-15, 50.0);
    CHECK(external_q(c2, w).approximate == doctest::Approx(q.approximate / 4).epsilon(1e-14));
}
