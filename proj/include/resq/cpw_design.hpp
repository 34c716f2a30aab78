#ifndef RESQ_CPW_DESIGN_HPP
#define RESQ_CPW_DESIGN_HPP

// Forward design of quarter-wave coplanar-waveguide resonators: quasi-static
// line parameters from the cross-section, lumped coupled resonance through
// the Norton equivalent of the coupling capacitor, and external Q.

namespace resq::cpw
{

inline constexpr double kSiliconEpsR = 11.68;

struct CpwGeometry
{
    double center_width_s = 0.0; // m
    double gap_g = 0.0;          // m
    double substrate_eps_r = kSiliconEpsR;
    double length_ell = 0.0;     // m

    // k = s / (s + 2g)
    double modulus() const { return center_width_s / (center_width_s + 2.0 * gap_g); }
};

struct LineParameters
{
    double z0 = 0.0;        // ohm
    double eps_eff = 0.0;
    double l_per_len = 0.0; // H/m
    double c_per_len = 0.0; // F/m

    double phase_velocity() const;
};

struct CouplingDesign
{
    double c_k = 0.0;     // F
    double r_load = 50.0; // ohm
    int mode_index_n = 1;
    double c_equiv = 0.0;   // C = C_l * length / 2
    double l_equiv_n = 0.0; // L_n = 2 L_l length / (n pi)^2
};

/// Complete elliptic integral of the first kind K(k), modulus convention,
/// via the arithmetic-geometric mean. Requires 0 <= k < 1.
double elliptic_k(double k);

/// Line parameters of a CPW on an infinitely thick substrate with
/// zero-thickness metal. Length is not needed and not checked.
LineParameters line_parameters(double center_width_s, double gap_g, double substrate_eps_r);
LineParameters line_parameters(const CpwGeometry &geom);

/// Odd-harmonic quarter-wave resonance, (2n-1) c0 / (4 l sqrt(eps_eff)).
double uncoupled_quarterwave_freq(const LineParameters &line, double length, int n);

/// Length giving `freq` for mode n (inverse of uncoupled_quarterwave_freq).
double quarterwave_length_for(const LineParameters &line, double freq, int n);

CouplingDesign make_coupling(const LineParameters &line, double length, int n, double c_k,
                             double r_load);

/// Norton equivalent capacitance C* = C_k / (1 + w^2 C_k^2 R_L^2).
double norton_capacitance(double c_k, double r_load, double omega);

/// Lumped resonance 1/(2 pi sqrt(L_n C)) with the coupling removed.
double lumped_uncoupled_freq(const CouplingDesign &coupling);

/// Solves w = 1/sqrt(L_n (C + 2 C*(w))) by fixed-point iteration from the
/// uncoupled value. Returns Hz. Throws ConvergenceFailure after 100 iterations.
double coupled_resonance(const CouplingDesign &coupling);

/// Quarter-wave frequency with the Norton shift of coupled_resonance applied
/// as a ratio to its own zero-coupling limit.
double quarterwave_coupled_freq(const LineParameters &line, double length, int n, double c_k,
                                double r_load);

struct ExternalQ
{
    double exact = 0.0;
    double approximate = 0.0;
    double loading_term = 0.0; // w^2 C_k^2 R_L^2
};

ExternalQ external_q(const CouplingDesign &coupling, double omega_n);

} // namespace resq::cpw

#endif
