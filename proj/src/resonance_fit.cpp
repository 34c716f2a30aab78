#include "resq/resonance_fit.hpp"

#include "resq/core.hpp"
#include "resq/errors.hpp"
#include "resq/levenberg_marquardt.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace resq
{

double ResonanceFit::sigma_of(const std::string &key) const
{
    const auto it = sigma.find(key);
    return it == sigma.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

bool passes_gates(const ResonanceFit &fit, const FitGates &gates, std::string *reason)
{
    auto reject = [&](const std::string &why) {
        if (reason)
            *reason = why;
        return false;
    };
    if (!fit.converged)
        return reject("fit did not converge");
    const double rel = fit.sigma_of("q_internal") / fit.q_internal;
    if (!(rel < gates.max_rel_sigma_qi))
        return reject("sigma(Qi)/Qi = " + std::to_string(rel) + " exceeds gate " +
                      std::to_string(gates.max_rel_sigma_qi));
    if (!(fit.params.f_r > fit.window_start && fit.params.f_r < fit.window_stop))
        return reject("f_r outside the sweep window");
    return true;
}

namespace
{

constexpr double kWingFraction = 0.2;
constexpr std::size_t kMinWingPoints = 6;
constexpr double kDetectThreshold = 8.0;

std::vector<double> unwrap(std::vector<double> phase)
{
    for (std::size_t i = 1; i < phase.size(); ++i)
    {
        const double d = phase[i] - phase[i - 1];
        phase[i] -= 2.0 * kPi * std::round(d / (2.0 * kPi));
    }
    return phase;
}

std::vector<double> angles(std::span<const Complex> z)
{
    std::vector<double> out(z.size());
    std::transform(z.begin(), z.end(), out.begin(), [](Complex c) { return std::arg(c); });
    return out;
}

// Frequency of the deepest interior sample; anchors the resonance tail terms.
double interior_dip(const ComplexSweep &sweep, std::size_t left, std::size_t right)
{
    std::size_t best = left;
    for (std::size_t i = left; i + right < sweep.size(); ++i)
        if (std::abs(sweep.s21[i]) < std::abs(sweep.s21[best]))
            best = i;
    return sweep.freqs[best];
}

struct WingFit
{
    Eigen::VectorXd coeffs;
    double residual = 0.0;
};

WingFit least_squares(const Eigen::MatrixXd &basis, const Eigen::VectorXd &values)
{
    WingFit out;
    out.coeffs = basis.colPivHouseholderQr().solve(values);
    out.residual = (basis * out.coeffs - values).squaredNorm();
    return out;
}

struct WingLayout
{
    std::vector<std::size_t> index;
    double f_center = 0.0;
    double half_span = 0.0;
    double f_dip = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
};

WingLayout wing_layout(const ComplexSweep &sweep)
{
    const std::size_t n = sweep.size();
    WingLayout layout;
    if (n >= 2)
    {
        const double front = sweep.freqs.front();
        const double back = sweep.freqs.back();
        const double edge = kWingFraction * (back - front) * (1.0 + 1e-9);
        while (layout.left < n && sweep.freqs[layout.left] <= front + edge)
            ++layout.left;
        while (layout.right < n && sweep.freqs[n - 1 - layout.right] >= back - edge)
            ++layout.right;
    }
    if (layout.left < kMinWingPoints || layout.right < kMinWingPoints ||
        layout.left + layout.right >= n)
        throw Error(ErrorKind::InsufficientWings,
                    "each wing needs at least " + std::to_string(kMinWingPoints) + " points",
                    "estimate_delay");
    for (std::size_t i = 0; i < layout.left; ++i)
        layout.index.push_back(i);
    for (std::size_t i = n - layout.right; i < n; ++i)
        layout.index.push_back(i);
    layout.f_center = 0.5 * (sweep.freqs.front() + sweep.freqs.back());
    layout.half_span = 0.5 * (sweep.freqs.back() - sweep.freqs.front());
    layout.f_dip = interior_dip(sweep, layout.left, layout.right);
    return layout;
}

// Columns: 1, x, t, t^2, t^3 with x = (f - fc)/hs and t = hs/(f - f_dip).
Eigen::MatrixXd wing_basis(const ComplexSweep &sweep, const WingLayout &layout, bool odd_tail)
{
    const auto rows = static_cast<Eigen::Index>(layout.index.size());
    Eigen::MatrixXd basis(rows, odd_tail ? 5 : 4);
    for (Eigen::Index r = 0; r < rows; ++r)
    {
        const double f = sweep.freqs[layout.index[static_cast<std::size_t>(r)]];
        const double x = (f - layout.f_center) / layout.half_span;
        const double t = layout.half_span / (f - layout.f_dip);
        basis(r, 0) = 1.0;
        basis(r, 1) = x;
        if (odd_tail)
        {
            basis(r, 2) = t;
            basis(r, 3) = t * t;
            basis(r, 4) = t * t * t;
        }
        else
        {
            basis(r, 2) = t * t;
            basis(r, 3) = t * t * t * t;
        }
    }
    return basis;
}

double line_slope(std::span<const double> x, std::span<const double> y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

// Magnitude slope in dB/Hz from the wings, with an even tail in 1/(f - f_dip).
double estimate_amp_slope(const ComplexSweep &sweep)
{
    const WingLayout layout = wing_layout(sweep);
    const Eigen::MatrixXd basis = wing_basis(sweep, layout, false);
    Eigen::VectorXd db(basis.rows());
    for (Eigen::Index r = 0; r < basis.rows(); ++r)
        db[r] = 20.0 * std::log10(std::abs(sweep.s21[layout.index[static_cast<std::size_t>(r)]]));
    const WingFit fit = least_squares(basis, db);
    return fit.coeffs[1] / layout.half_span;
}

ComplexSweep remove_background_trend(const ComplexSweep &sweep, double tau, double amp_slope,
                                     double f_ref)
{
    ComplexSweep out = sweep;
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const double df = out.freqs[i] - f_ref;
        const double mag = std::pow(10.0, -amp_slope * df / 20.0);
        out.s21[i] *= std::polar(mag, 2.0 * kPi * df * tau);
    }
    return out;
}

struct InternalLayout
{
    double f_r0;
    double linewidth0;
    double f_ref;
    double half_span;
};

struct ModelParams
{
    ResonanceParams res;
    BackgroundParams bg;
};

ModelParams decode(const Eigen::VectorXd &p, const InternalLayout &lay)
{
    ModelParams m;
    m.res.f_r = lay.f_r0 + p[0] * lay.linewidth0;
    m.res.q_loaded = std::exp(p[1]);
    m.res.q_external_mag = std::exp(p[2]);
    m.res.theta = p[3];
    m.bg.amp_db_at_fref = p[4];
    m.bg.amp_slope_db_per_hz = p[5] / lay.half_span;
    m.bg.cable_delay_tau = p[7] / (2.0 * kPi * lay.half_span);
    m.bg.phase_offset_alpha = p[6] + 2.0 * kPi * lay.f_ref * m.bg.cable_delay_tau;
    m.bg.f_ref = lay.f_ref;
    return m;
}

// Background referenced to f_ref so the phase parameters stay O(1).
Complex model_at(const Eigen::VectorXd &p, const InternalLayout &lay, double f)
{
    const double x = (f - lay.f_ref) / lay.half_span;
    const Complex a = std::polar(std::pow(10.0, (p[4] + p[5] * x) / 20.0), p[6] - p[7] * x);
    const double f_r = lay.f_r0 + p[0] * lay.linewidth0;
    const double q_l = std::exp(p[1]);
    const double depth = q_l / std::exp(p[2]);
    const Complex denom(1.0, 2.0 * q_l * (f - f_r) / f_r);
    return a * (1.0 - std::polar(depth, p[3]) / denom);
}

double propagate(const Eigen::VectorXd &grad, const Eigen::MatrixXd &cov)
{
    double var = 0.0;
    for (Eigen::Index i = 0; i < grad.size(); ++i)
    {
        if (grad[i] == 0.0)
            continue;
        for (Eigen::Index j = 0; j < grad.size(); ++j)
        {
            if (grad[j] == 0.0)
                continue;
            var += grad[i] * cov(i, j) * grad[j];
        }
    }
    return std::sqrt(std::max(var, 0.0));
}

// Deepest interior excursion from the wing level, in units of the
// point-to-point noise. Pure noise stays near 3 for a few hundred points.
void require_resonance(const ComplexSweep &flat)
{
    const WingLayout layout = wing_layout(flat);
    const std::size_t n = flat.size();
    Complex level(0.0, 0.0);
    for (std::size_t i : layout.index)
        level += flat.s21[i];
    level /= static_cast<double>(layout.index.size());

    std::vector<double> steps(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        steps[i] = std::abs(flat.s21[i + 1] - flat.s21[i]);
    std::nth_element(steps.begin(), steps.begin() + static_cast<long>(steps.size() / 2), steps.end());
    // median |dz| of complex Gaussian noise is 2*sqrt(ln 2) per-component sigma
    const double sigma = steps[steps.size() / 2] / (2.0 * std::sqrt(std::log(2.0)));

    double excursion = 0.0;
    for (std::size_t i = layout.left; i + layout.right < n; ++i)
        excursion = std::max(excursion, std::abs(flat.s21[i] - level));
    if (!(excursion > kDetectThreshold * sigma))
        throw Error(ErrorKind::DegenerateGeometry, "no resonance resolvable above the noise",
                    "detect");
}

} // namespace

double estimate_delay(const ComplexSweep &sweep)
{
    const WingLayout layout = wing_layout(sweep);
    const std::size_t wl = layout.left;
    const std::size_t wr = layout.right;
    const std::size_t n = sweep.size();

    const std::span<const Complex> all(sweep.s21);
    std::vector<double> left = unwrap(angles(all.first(wl)));
    std::vector<double> right = unwrap(angles(all.last(wr)));

    // Pick the 2*pi offset between wings from the within-wing slopes first.
    std::vector<double> fl(sweep.freqs.begin(), sweep.freqs.begin() + static_cast<long>(wl));
    std::vector<double> fr(sweep.freqs.end() - static_cast<long>(wr), sweep.freqs.end());
    const double slope = 0.5 * (line_slope(fl, left) + line_slope(fr, right));
    const double predicted = left.back() + slope * (sweep.freqs[n - wr] - sweep.freqs[wl - 1]);
    const double m0 = std::round((predicted - right.front()) / (2.0 * kPi));

    const Eigen::MatrixXd basis = wing_basis(sweep, layout, true);
    std::optional<WingFit> best;
    Eigen::VectorXd phase(basis.rows());
    for (int dm = -2; dm <= 2; ++dm)
    {
        const double offset = 2.0 * kPi * (m0 + dm);
        for (std::size_t i = 0; i < wl; ++i)
            phase[static_cast<Eigen::Index>(i)] = left[i];
        for (std::size_t i = 0; i < wr; ++i)
            phase[static_cast<Eigen::Index>(wl + i)] = right[i] + offset;
        WingFit fit = least_squares(basis, phase);
        if (!best || fit.residual < best->residual)
            best = std::move(fit);
    }
    return -best->coeffs[1] / layout.half_span / (2.0 * kPi);
}

Circle fit_circle(std::span<const Complex> points)
{
    const std::size_t n = points.size();
    if (n < 8)
        throw Error(ErrorKind::DegenerateGeometry, "circle fit needs at least 8 points",
                    "fit_circle");

    double mean_x = 0.0, mean_y = 0.0;
    for (const Complex &p : points)
    {
        mean_x += p.real();
        mean_y += p.imag();
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double mxx = 0, myy = 0, mxy = 0, mxz = 0, myz = 0, mzz = 0;
    for (const Complex &p : points)
    {
        const double xi = p.real() - mean_x;
        const double yi = p.imag() - mean_y;
        const double zi = xi * xi + yi * yi;
        mxy += xi * yi;
        mxx += xi * xi;
        myy += yi * yi;
        mxz += xi * zi;
        myz += yi * zi;
        mzz += zi * zi;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    mxx *= inv_n;
    myy *= inv_n;
    mxy *= inv_n;
    mxz *= inv_n;
    myz *= inv_n;
    mzz *= inv_n;

    // Scatter conditioning of the centred coordinates.
    const double tr = mxx + myy;
    const double disc = std::sqrt(std::max(0.25 * (mxx - myy) * (mxx - myy) + mxy * mxy, 0.0));
    const double lambda_max = 0.5 * tr + disc;
    const double lambda_min = 0.5 * tr - disc;
    if (!(lambda_min > 0.0) || lambda_max / lambda_min > 1e12)
        throw Error(ErrorKind::DegenerateGeometry, "points are collinear or coincident",
                    "fit_circle");

    const double mz = mxx + myy;
    const double cov_xy = mxx * myy - mxy * mxy;
    const double var_z = mzz - mz * mz;
    const double a3 = 4.0 * mz;
    const double a2 = -3.0 * mz * mz - mzz;
    const double a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz;
    const double a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) - var_z * cov_xy;
    const double a22 = a2 + a2;
    const double a33 = a3 + a3 + a3;

    // Newton on the characteristic polynomial from x = 0.
    double x = 0.0;
    double y = a0;
    for (int iter = 0; iter < 99; ++iter)
    {
        const double dy = a1 + x * (a22 + a33 * x);
        const double x_new = x - y / dy;
        if (x_new == x || !std::isfinite(x_new))
            break;
        const double y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
        if (std::abs(y_new) >= std::abs(y))
            break;
        x = x_new;
        y = y_new;
    }

    const double det = x * x - x * mz + cov_xy;
    if (det == 0.0 || !std::isfinite(det))
        throw Error(ErrorKind::DegenerateGeometry, "singular Taubin system", "fit_circle");
    const double xc = (mxz * (myy - x) - myz * mxy) / det / 2.0;
    const double yc = (myz * (mxx - x) - mxz * mxy) / det / 2.0;

    Circle out;
    out.center = Complex(xc + mean_x, yc + mean_y);
    out.radius = std::sqrt(xc * xc + yc * yc + mz);
    if (!std::isfinite(out.radius) || !std::isfinite(out.center.real()) ||
        !std::isfinite(out.center.imag()))
        throw Error(ErrorKind::DegenerateGeometry, "non-finite circle", "fit_circle");
    return out;
}

PhaseFit fit_phase(const ComplexSweep &sweep, Complex center)
{
    const std::size_t n = sweep.size();
    if (n < 8)
        throw Error(ErrorKind::InvalidInput, "phase fit needs at least 8 points", "fit_phase");

    std::vector<Complex> shifted(n);
    for (std::size_t i = 0; i < n; ++i)
        shifted[i] = sweep.s21[i] - center;
    const std::vector<double> phi = unwrap(angles(shifted));
    const std::vector<double> &f = sweep.freqs;

    // phi falls by ~2 pi through the resonance; phi0 sits at the midpoint.
    const double phi_mid = 0.5 * (phi.front() + phi.back());
    auto crossing = [&](double level) -> std::optional<double> {
        for (std::size_t i = 1; i < n; ++i)
        {
            const double a = phi[i - 1] - level;
            const double b = phi[i] - level;
            if ((a >= 0.0 && b < 0.0) || (a <= 0.0 && b > 0.0))
                return f[i - 1] + (f[i] - f[i - 1]) * a / (a - b);
        }
        return std::nullopt;
    };
    const double span = f.back() - f.front();
    const double f_r0 = crossing(phi_mid).value_or(0.5 * (f.front() + f.back()));
    const auto lo = crossing(phi_mid + kPi / 2.0);
    const auto hi = crossing(phi_mid - kPi / 2.0);
    double width = (lo && hi) ? std::abs(*hi - *lo) : 0.0;
    if (!(width > 0.0))
        width = span / 10.0;
    const double q_l0 = f_r0 / width;
    const double linewidth0 = f_r0 / q_l0;

    const lm::ResidualFn residual = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
        const double f_r = f_r0 + p[1] * linewidth0;
        const double q_l = std::exp(p[2]);
        for (std::size_t i = 0; i < n; ++i)
        {
            const double model = p[0] + 2.0 * std::atan(2.0 * q_l * (1.0 - f[i] / f_r));
            r[static_cast<Eigen::Index>(i)] = wrap_phase(phi[i] - model);
        }
    };
    Eigen::VectorXd p0(3);
    p0 << phi_mid, 0.0, std::log(q_l0);
    const lm::Result result = lm::minimize(residual, p0, static_cast<Eigen::Index>(n));
    if (!result.converged)
        throw Error(ErrorKind::ConvergenceFailure, "phase fit: " + result.stop_reason, "fit_phase");

    PhaseFit out;
    out.f_r = f_r0 + result.params[1] * linewidth0;
    out.q_loaded = std::exp(result.params[2]);
    out.phase_offset = result.params[0];
    if (!(out.f_r > f.front() && out.f_r < f.back()))
        throw Error(ErrorKind::WindowMismatch, "fitted f_r lies outside the sweep window",
                    "fit_phase");
    return out;
}

ResonanceFit fit_resonance(const ComplexSweep &sweep)
{
    try
    {
        sweep.validate();
    }
    catch (const Error &e)
    {
        throw e.with_stage("validate");
    }

    const std::size_t n = sweep.size();
    const double f_ref = 0.5 * (sweep.freqs.front() + sweep.freqs.back());
    const double half_span = 0.5 * (sweep.freqs.back() - sweep.freqs.front());

    const double tau = estimate_delay(sweep);
    const double amp_slope =
        estimate_amp_slope(remove_background_trend(sweep, tau, 0.0, f_ref));
    const ComplexSweep flat = remove_background_trend(sweep, tau, amp_slope, f_ref);
    require_resonance(flat);

    const Circle circle = fit_circle(flat.s21);
    const PhaseFit phase = fit_phase(flat, circle.center);

    // Off-resonance point: diametrically opposite the resonance point.
    const Complex off_resonance = circle.center - std::polar(circle.radius, phase.phase_offset);
    if (std::abs(off_resonance) == 0.0)
        throw Error(ErrorKind::DegenerateGeometry, "off-resonance point at the origin",
                    "normalize");
    const Complex center_n = circle.center / off_resonance;
    const double depth0 = 2.0 * circle.radius / std::abs(off_resonance);
    const double theta0 = std::arg(1.0 - center_n);

    const InternalLayout lay{phase.f_r, phase.f_r / phase.q_loaded, f_ref, half_span};
    Eigen::VectorXd p0(8);
    p0 << 0.0, std::log(phase.q_loaded), std::log(phase.q_loaded / depth0), theta0,
        20.0 * std::log10(std::abs(off_resonance)), amp_slope * half_span, std::arg(off_resonance),
        2.0 * kPi * tau * half_span;

    const auto n_res = static_cast<Eigen::Index>(2 * n);
    const lm::ResidualFn residual = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
        for (std::size_t i = 0; i < n; ++i)
        {
            const Complex d = model_at(p, lay, sweep.freqs[i]) - sweep.s21[i];
            r[static_cast<Eigen::Index>(2 * i)] = d.real();
            r[static_cast<Eigen::Index>(2 * i + 1)] = d.imag();
        }
    };
    const lm::Result result = lm::minimize(residual, p0, n_res);
    if (!result.converged)
        throw Error(ErrorKind::ConvergenceFailure, "joint refinement: " + result.stop_reason,
                    "refine");

    const ModelParams m = decode(result.params, lay);
    ResonanceFit fit;
    fit.params = m.res;
    fit.params.theta = wrap_phase(m.res.theta);
    fit.background = m.bg;
    fit.background.phase_offset_alpha = wrap_phase(m.bg.phase_offset_alpha);
    fit.n_points_used = n;
    fit.window_start = sweep.freqs.front();
    fit.window_stop = sweep.freqs.back();
    fit.iterations = result.iterations;

    const double sum_sq = 2.0 * result.cost;
    fit.residual_rms = std::sqrt(sum_sq / static_cast<double>(n));

    if (!(fit.params.f_r > fit.window_start && fit.params.f_r < fit.window_stop))
        throw Error(ErrorKind::WindowMismatch, "refined f_r lies outside the sweep window",
                    "refine");
    const double dip = fit.params.depth() * std::pow(10.0, fit.background.amp_db_at_fref / 20.0);
    if (!(dip > 5.0 * fit.residual_rms))
        throw Error(ErrorKind::DegenerateGeometry,
                    "no resonance resolvable above the residual noise", "refine");

    try
    {
        fit.q_internal =
            q_internal_from_fit(fit.params.q_loaded, fit.params.q_external_mag, fit.params.theta);
    }
    catch (const Error &e)
    {
        throw e.with_stage("q_internal");
    }

    const double dof = static_cast<double>(n_res - result.params.size());
    const double variance = dof > 0.0 ? sum_sq / dof : 0.0;
    const Eigen::MatrixXd cov = lm::covariance(result.jacobian, variance);
    auto sd = [&](Eigen::Index i) { return std::sqrt(cov(i, i)); };

    const double q_l = fit.params.q_loaded;
    const double q_e = fit.params.q_external_mag;
    fit.sigma["f_r_hz"] = sd(0) * lay.linewidth0;
    fit.sigma["q_loaded"] = q_l * sd(1);
    fit.sigma["q_external_mag"] = q_e * sd(2);
    fit.sigma["theta"] = sd(3);
    fit.sigma["amp_db_at_fref"] = sd(4);
    fit.sigma["amp_slope_db_per_hz"] = sd(5) / half_span;
    fit.sigma["cable_delay_tau"] = sd(7) / (2.0 * kPi * half_span);
    {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(8);
        g[6] = 1.0;
        g[7] = f_ref / half_span;
        fit.sigma["phase_offset_alpha"] = propagate(g, cov);
    }
    {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(8);
        g[1] = -1.0 / q_l;
        g[2] = std::cos(fit.params.theta) / q_e;
        g[3] = std::sin(fit.params.theta) / q_e;
        const double sigma_inv = propagate(g, cov);
        fit.sigma["inv_q_internal"] = sigma_inv;
        fit.sigma["q_internal"] = sigma_inv * fit.q_internal * fit.q_internal;
    }

    fit.converged = std::isfinite(fit.residual_rms) && fit.q_internal > 0.0;
    return fit;
}

} // namespace resq
