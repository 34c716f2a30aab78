#include "resq/cpw_design.hpp"

#include "resq/core.hpp"
#include "resq/errors.hpp"

#include <cmath>

namespace resq::cpw
{

double LineParameters::phase_velocity() const
{
    return PhysicalConstants::c0 / std::sqrt(eps_eff);
}

double elliptic_k(double k)
{
    if (!(k >= 0.0 && k < 1.0))
        throw Error(ErrorKind::InvalidInput, "elliptic modulus must lie in [0, 1)");
    double a = 1.0;
    double b = std::sqrt((1.0 - k) * (1.0 + k));
    for (int i = 0; i < 64 && std::abs(a - b) > 1e-15 * a; ++i)
    {
        const double mean = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = mean;
    }
    return kPi / (a + b);
}

LineParameters line_parameters(double center_width_s, double gap_g, double substrate_eps_r)
{
    if (!(center_width_s > 0.0) || !(gap_g > 0.0) || !(substrate_eps_r > 0.0))
        throw Error(ErrorKind::InvalidInput, "CPW width, gap and permittivity must be positive");

    const double k = center_width_s / (center_width_s + 2.0 * gap_g);
    const double k_prime = std::sqrt((1.0 - k) * (1.0 + k));

    LineParameters line;
    line.eps_eff = (substrate_eps_r + 1.0) / 2.0;
    const double root_eps = std::sqrt(line.eps_eff);
    line.z0 = 30.0 * kPi / root_eps * elliptic_k(k_prime) / elliptic_k(k);
    line.c_per_len = root_eps / (line.z0 * PhysicalConstants::c0);
    line.l_per_len = line.z0 * root_eps / PhysicalConstants::c0;
    return line;
}

LineParameters line_parameters(const CpwGeometry &geom)
{
    return line_parameters(geom.center_width_s, geom.gap_g, geom.substrate_eps_r);
}

double uncoupled_quarterwave_freq(const LineParameters &line, double length, int n)
{
    if (n < 1 || !(length > 0.0))
        throw Error(ErrorKind::InvalidInput, "mode index must be >= 1 and length positive");
    return (2.0 * n - 1.0) * PhysicalConstants::c0 / (4.0 * length * std::sqrt(line.eps_eff));
}

double quarterwave_length_for(const LineParameters &line, double freq, int n)
{
    if (n < 1 || !(freq > 0.0))
        throw Error(ErrorKind::InvalidInput, "mode index must be >= 1 and frequency positive");
    return (2.0 * n - 1.0) * PhysicalConstants::c0 / (4.0 * freq * std::sqrt(line.eps_eff));
}

CouplingDesign make_coupling(const LineParameters &line, double length, int n, double c_k,
                             double r_load)
{
    if (n < 1 || !(length > 0.0) || !(c_k >= 0.0) || !(r_load > 0.0))
        throw Error(ErrorKind::InvalidInput, "invalid coupling design inputs");
    CouplingDesign out;
    out.c_k = c_k;
    out.r_load = r_load;
    out.mode_index_n = n;
    out.c_equiv = line.c_per_len * length / 2.0;
    const double n_pi = n * kPi;
    out.l_equiv_n = 2.0 * line.l_per_len * length / (n_pi * n_pi);
    return out;
}

double norton_capacitance(double c_k, double r_load, double omega)
{
    const double x = omega * c_k * r_load;
    return c_k / (1.0 + x * x);
}

double lumped_uncoupled_freq(const CouplingDesign &coupling)
{
    return 1.0 / (2.0 * kPi * std::sqrt(coupling.l_equiv_n * coupling.c_equiv));
}

double coupled_resonance(const CouplingDesign &coupling)
{
    double omega = 2.0 * kPi * lumped_uncoupled_freq(coupling);
    for (int i = 0; i < 100; ++i)
    {
        const double c_star = norton_capacitance(coupling.c_k, coupling.r_load, omega);
        const double next = 1.0 / std::sqrt(coupling.l_equiv_n * (coupling.c_equiv + 2.0 * c_star));
        if (std::abs(next - omega) <= 1e-12 * next)
            return next / (2.0 * kPi);
        omega = next;
    }
    throw Error(ErrorKind::ConvergenceFailure, "coupled resonance iteration did not settle",
                "coupled_resonance");
}

double quarterwave_coupled_freq(const LineParameters &line, double length, int n, double c_k,
                                double r_load)
{
    const CouplingDesign coupling = make_coupling(line, length, n, c_k, r_load);
    const double shift = coupled_resonance(coupling) / lumped_uncoupled_freq(coupling);
    return uncoupled_quarterwave_freq(line, length, n) * shift;
}

ExternalQ external_q(const CouplingDesign &coupling, double omega_n)
{
    if (!(omega_n > 0.0) || !(coupling.c_k > 0.0) || !(coupling.r_load > 0.0) ||
        !(coupling.c_equiv > 0.0))
        throw Error(ErrorKind::InvalidInput, "external Q needs positive C, C_k, R_L and omega");
    ExternalQ q;
    const double x = omega_n * coupling.c_k * coupling.r_load;
    q.loading_term = x * x;
    q.approximate = coupling.c_equiv /
                    (2.0 * omega_n * coupling.c_k * coupling.c_k * coupling.r_load);
    q.exact = q.approximate * (1.0 + q.loading_term);
    return q;
}

} // namespace resq::cpw
