#include "resq/tls_analysis.hpp"

#include "resq/errors.hpp"
#include "resq/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace resq
{

double tls_model(double n_bar, double q0, double q_tls, double n_c)
{
    return 1.0 / q0 + (1.0 / q_tls) / std::sqrt(1.0 + n_bar / n_c);
}

std::vector<TlsPoint> tls_points(const PowerSeries &series)
{
    std::vector<TlsPoint> out;
    out.reserve(series.points.size());
    for (const PowerPoint &p : series.points)
        out.push_back({p.n_bar, p.q_internal, p.sigma_q_internal});
    return out;
}

TlsFit fit_tls(std::span<const TlsPoint> points)
{
    const std::size_t n = points.size();
    if (n < 4)
        throw Error(ErrorKind::InsufficientSeries, "TLS fit needs at least 4 points", "fit_tls");
    for (const TlsPoint &p : points)
        if (!(p.n_bar > 0.0) || !(p.q_internal > 0.0))
            throw Error(ErrorKind::InvalidInput, "TLS points need positive n_bar and Qi",
                        "fit_tls");

    std::vector<double> loss(n), weight_sigma(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        loss[i] = 1.0 / points[i].q_internal;
        const double q = points[i].q_internal;
        const double s = points[i].sigma_q_internal / (q * q);
        const double floor = kTlsWeightFloor * loss[i];
        weight_sigma[i] = (std::isfinite(s) && s > floor) ? s : floor;
    }

    const auto [lo_it, hi_it] = std::minmax_element(
        points.begin(), points.end(),
        [](const TlsPoint &a, const TlsPoint &b) { return a.n_bar < b.n_bar; });
    const double n_min = lo_it->n_bar;
    const double n_max = hi_it->n_bar;

    // n_c far outside the sampled range is unobservable; hold it at the edge
    const double log_nc_lo = std::log(n_min) - std::log(kTlsNcMargin);
    const double log_nc_hi = std::log(n_max) + std::log(kTlsNcMargin);
    const auto clamp_nc = [&](double v) { return std::clamp(v, log_nc_lo, log_nc_hi); };

    // For fixed n_c the model is linear in (1/Q0, 1/Q_TLS): solve that part
    // exactly with both terms kept non-negative, leaving a 1-D search.
    struct Linear
    {
        double a = 0.0, b = 0.0, cost = 0.0;
    };
    const auto profile = [&](double log_nc) {
        const double n_c = std::exp(log_nc);
        double s00 = 0, s01 = 0, s11 = 0, y0 = 0, y1 = 0;
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            g[i] = 1.0 / std::sqrt(1.0 + points[i].n_bar / n_c);
            const double w = 1.0 / (weight_sigma[i] * weight_sigma[i]);
            s00 += w;
            s01 += w * g[i];
            s11 += w * g[i] * g[i];
            y0 += w * loss[i];
            y1 += w * g[i] * loss[i];
        }
        const auto cost_of = [&](double a, double b) {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                const double r = (loss[i] - a - b * g[i]) / weight_sigma[i];
                c += r * r;
            }
            return 0.5 * c;
        };
        Linear best{y0 / s00, 0.0, 0.0};
        best.cost = cost_of(best.a, best.b);
        const Linear tls_only{0.0, y1 / s11, cost_of(0.0, y1 / s11)};
        if (tls_only.cost < best.cost)
            best = tls_only;
        const double det = s00 * s11 - s01 * s01;
        if (det > 0.0)
        {
            const double a = (s11 * y0 - s01 * y1) / det;
            const double b = (s00 * y1 - s01 * y0) / det;
            if (a >= 0.0 && b >= 0.0)
            {
                const double c = cost_of(a, b);
                if (c <= best.cost)
                    best = {a, b, c};
            }
        }
        return best;
    };

    constexpr int kGrid = 241;
    double t_best = log_nc_lo;
    double c_best = std::numeric_limits<double>::infinity();
    const double dt = (log_nc_hi - log_nc_lo) / (kGrid - 1);
    for (int k = 0; k < kGrid; ++k)
    {
        const double t = log_nc_lo + dt * k;
        const double c = profile(t).cost;
        if (c < c_best)
        {
            c_best = c;
            t_best = t;
        }
    }
    double lo = std::max(log_nc_lo, t_best - dt);
    double hi = std::min(log_nc_hi, t_best + dt);
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
    double f1 = profile(x1).cost, f2 = profile(x2).cost;
    while (hi - lo > 1e-10)
    {
        if (f1 < f2)
        {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = profile(x1).cost;
        }
        else
        {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = profile(x2).cost;
        }
    }
    for (double t : {0.5 * (lo + hi), log_nc_lo, log_nc_hi})
        if (profile(t).cost < c_best)
        {
            c_best = profile(t).cost;
            t_best = t;
        }
    const Linear lin = profile(t_best);

    // Terms pinned at zero are represented by a negligible positive loss.
    const double total = std::max(lin.a + lin.b, std::numeric_limits<double>::min());
    const double tiny = 1e-12 * total;

    const lm::ResidualFn residual = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
        const double q0 = std::exp(p[0]);
        const double q_tls = std::exp(p[1]);
        const double n_c = std::exp(clamp_nc(p[2]));
        for (std::size_t i = 0; i < n; ++i)
            r[static_cast<Eigen::Index>(i)] =
                (loss[i] - tls_model(points[i].n_bar, q0, q_tls, n_c)) / weight_sigma[i];
    };
    Eigen::VectorXd params(3);
    params << -std::log(std::max(lin.a, tiny)), -std::log(std::max(lin.b, tiny)), t_best;
    Eigen::VectorXd residuals(static_cast<Eigen::Index>(n));
    residual(params, residuals);
    double cost = 0.5 * residuals.squaredNorm();
    int iterations = 0;
    const lm::Result polish = lm::minimize(residual, params, static_cast<Eigen::Index>(n));
    if (polish.converged && polish.cost <= cost)
    {
        params = polish.params;
        residuals = polish.residuals;
        cost = polish.cost;
        iterations = polish.iterations;
    }
    if (!std::isfinite(cost) || !params.allFinite())
        throw Error(ErrorKind::ConvergenceFailure, "TLS fit: non-finite solution", "fit_tls");
    params[2] = clamp_nc(params[2]);
    const Eigen::MatrixXd jacobian = lm::numeric_jacobian(residual, params, residuals, 1e-6);

    TlsFit fit;
    fit.q0 = std::exp(params[0]);
    fit.q_tls = std::exp(params[1]);
    fit.n_c = std::exp(params[2]);
    fit.converged = true;
    fit.iterations = iterations;
    fit.n_points = n;
    fit.insufficient_dynamic_range = n_max / n_min < 100.0;

    const double chi2 = 2.0 * cost;
    const double variance = n > 3 ? chi2 / static_cast<double>(n - 3) : 1.0;
    const Eigen::MatrixXd cov = lm::covariance(jacobian, variance);
    const double s_log_q0 = std::sqrt(cov(0, 0));
    const double s_log_qtls = std::sqrt(cov(1, 1));
    const double s_log_nc = std::sqrt(cov(2, 2));
    fit.sigma["q0"] = fit.q0 * s_log_q0;
    fit.sigma["q_tls"] = fit.q_tls * s_log_qtls;
    fit.sigma["n_c"] = fit.n_c * s_log_nc;
    fit.sigma["inv_q0"] = s_log_q0 / fit.q0;
    fit.sigma["inv_q_tls"] = s_log_qtls / fit.q_tls;
    fit.degenerate_n_c = !(fit.sigma["n_c"] <= fit.n_c) || fit.n_c < n_min || fit.n_c > n_max ||
                         params[2] <= log_nc_lo || params[2] >= log_nc_hi;

    const double inv_q0 = 1.0 / fit.q0;
    const double inv_qtls = 1.0 / fit.q_tls;
    fit.frac_tls_lowpower = inv_qtls / (inv_q0 + inv_qtls);
    fit.frac_background_lowpower = 1.0 - fit.frac_tls_lowpower;

    if (n >= 3)
    {
        const ResidualStats stats = residual_stats(points, fit);
        fit.rrsd_percent = stats.rrsd_percent;
        fit.mean_residual_percent = stats.mean_percent;
    }
    return fit;
}

TlsFit fit_tls(const PowerSeries &series)
{
    const std::vector<TlsPoint> points = tls_points(series);
    return fit_tls(points);
}

ResidualStats residual_stats(std::span<const TlsPoint> points, const TlsFit &fit)
{
    const std::size_t n = points.size();
    if (n < 3)
        throw Error(ErrorKind::InsufficientSeries, "RRSD needs at least 3 points", "rrsd");
    std::vector<double> rel(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double meas = 1.0 / points[i].q_internal;
        const double model = tls_model(points[i].n_bar, fit.q0, fit.q_tls, fit.n_c);
        rel[i] = (meas - model) / meas;
    }
    const double mean = std::accumulate(rel.begin(), rel.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double r : rel)
        ss += (r - mean) * (r - mean);
    return {100.0 * std::sqrt(ss / static_cast<double>(n - 1)), 100.0 * mean};
}

double rrsd(const PowerSeries &series, const TlsFit &fit)
{
    const std::vector<TlsPoint> points = tls_points(series);
    return residual_stats(points, fit).rrsd_percent;
}

LossDecomposition decompose_loss(const TlsFit &fit, double n_bar)
{
    LossDecomposition d;
    d.background = 1.0 / fit.q0;
    d.tls = (1.0 / fit.q_tls) / std::sqrt(1.0 + n_bar / fit.n_c);
    d.fraction_tls = d.tls / (d.background + d.tls);
    return d;
}

CohortSummary make_cohort_summary(std::string label, std::vector<double> q_tls_values)
{
    if (q_tls_values.empty())
        throw Error(ErrorKind::InvalidInput, "cohort '" + label + "' has no Q_TLS values");
    for (double v : q_tls_values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw Error(ErrorKind::InvalidInput, "cohort '" + label + "' has a non-positive Q_TLS");
    CohortSummary s;
    s.cohort_label = std::move(label);
    s.mean_q_tls = std::accumulate(q_tls_values.begin(), q_tls_values.end(), 0.0) /
                   static_cast<double>(q_tls_values.size());
    const auto [lo, hi] = std::minmax_element(q_tls_values.begin(), q_tls_values.end());
    s.min_q_tls = *lo;
    s.max_q_tls = *hi;
    // Rounding can push a constant sequence's mean an ulp outside [min, max].
    s.mean_q_tls = std::clamp(s.mean_q_tls, s.min_q_tls, s.max_q_tls);
    s.q_tls_values = std::move(q_tls_values);
    return s;
}

double CohortComparison::ratio(const std::string &numerator, const std::string &denominator) const
{
    auto find = [&](const std::string &label) {
        for (std::size_t i = 0; i < ordered.size(); ++i)
            if (ordered[i].cohort_label == label)
                return i;
        throw Error(ErrorKind::InvalidInput, "unknown cohort '" + label + "'");
    };
    return mean_ratio[find(numerator)][find(denominator)];
}

CohortComparison compare_cohorts(std::span<const CohortSummary> cohorts)
{
    if (cohorts.size() < 2)
        throw Error(ErrorKind::InvalidInput, "cohort comparison needs at least two cohorts");
    CohortComparison out;
    for (const CohortSummary &c : cohorts)
    {
        if (c.q_tls_values.empty())
            throw Error(ErrorKind::InvalidInput, "cohort '" + c.cohort_label + "' is empty");
        out.ordered.push_back(c);
    }
    std::stable_sort(out.ordered.begin(), out.ordered.end(),
                     [](const CohortSummary &a, const CohortSummary &b) {
                         return a.mean_q_tls > b.mean_q_tls;
                     });
    const std::size_t m = out.ordered.size();
    out.mean_ratio.assign(m, std::vector<double>(m, 1.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out.mean_ratio[i][j] = out.ordered[i].mean_q_tls / out.ordered[j].mean_q_tls;
    return out;
}

} // namespace resq
