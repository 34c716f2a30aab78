#include "resq/io/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace resq::io
{

namespace
{

const char *const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};
constexpr int kPaletteSize = 8;

std::string px(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string &s)
{
    std::string out;
    for (char c : s)
    {
        switch (c)
        {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Axis
{
    double lo = 0.0, hi = 1.0; // data range (decades when log)
    double p0 = 0.0, p1 = 1.0; // pixel range
    bool log = false;

    double map(double v) const
    {
        const double x = log ? std::log10(v) : v;
        return p0 + (x - lo) / (hi - lo) * (p1 - p0);
    }
};

Axis log_axis(double vmin, double vmax, double p0, double p1)
{
    Axis a;
    a.log = true;
    a.lo = std::floor(std::log10(vmin));
    a.hi = std::ceil(std::log10(vmax));
    if (a.hi <= a.lo)
        a.hi = a.lo + 1.0;
    a.p0 = p0;
    a.p1 = p1;
    return a;
}

double nice_step(double span)
{
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw)
            return m * mag;
    return 10.0 * mag;
}

Axis linear_axis(double vmin, double vmax, double p0, double p1)
{
    if (!(vmax > vmin))
    {
        vmin -= 1.0;
        vmax += 1.0;
    }
    const double step = nice_step(vmax - vmin);
    Axis a;
    a.lo = std::floor(vmin / step) * step;
    a.hi = std::ceil(vmax / step) * step;
    a.p0 = p0;
    a.p1 = p1;
    return a;
}

class Svg
{
  public:
    Svg(int width, int height) : width_(width), height_(height) {}

    void raw(const std::string &s) { body_ += s; }

    void line(double x1, double y1, double x2, double y2, const char *stroke, double w = 1.0,
              const char *dash = nullptr)
    {
        body_ += "<path d=\"M" + px(x1) + ' ' + px(y1) + " L" + px(x2) + ' ' + px(y2) +
                 "\" stroke=\"" + stroke + "\" stroke-width=\"" + px(w) + "\" fill=\"none\"";
        if (dash)
            body_ += std::string(" stroke-dasharray=\"") + dash + '"';
        body_ += "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>> &pts, const char *stroke,
                  double w = 1.5, const char *dash = nullptr)
    {
        if (pts.size() < 2)
            return;
        std::string d;
        for (std::size_t i = 0; i < pts.size(); ++i)
            d += (i == 0 ? "M" : " L") + px(pts[i].first) + ' ' + px(pts[i].second);
        body_ += "<path d=\"" + d + "\" stroke=\"" + stroke + "\" stroke-width=\"" + px(w) +
                 "\" fill=\"none\"";
        if (dash)
            body_ += std::string(" stroke-dasharray=\"") + dash + '"';
        body_ += "/>\n";
    }

    // Markers are drawn as paths so every renderer shows them identically.
    void marker(double x, double y, const char *color, int shape = 0, double r = 3.5)
    {
        std::string d;
        if (shape % 3 == 0)
            d = "M" + px(x - r) + ' ' + px(y) + " A" + px(r) + ' ' + px(r) + " 0 1 0 " +
                px(x + r) + ' ' + px(y) + " A" + px(r) + ' ' + px(r) + " 0 1 0 " + px(x - r) +
                ' ' + px(y) + " Z";
        else if (shape % 3 == 1)
            d = "M" + px(x - r) + ' ' + px(y - r) + " L" + px(x + r) + ' ' + px(y - r) + " L" +
                px(x + r) + ' ' + px(y + r) + " L" + px(x - r) + ' ' + px(y + r) + " Z";
        else
            d = "M" + px(x) + ' ' + px(y - r * 1.2) + " L" + px(x + r) + ' ' + px(y + r) + " L" +
                px(x - r) + ' ' + px(y + r) + " Z";
        body_ += "<path d=\"" + d + "\" fill=\"" + color + "\" stroke=\"" + color + "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const char *fill, const char *stroke = "none")
    {
        body_ += "<path d=\"M" + px(x) + ' ' + px(y) + " h" + px(w) + " v" + px(h) + " h" +
                 px(-w) + " Z\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
    }

    void text(double x, double y, const std::string &s, const char *anchor = "middle",
              int size = 12, const char *fill = "#000", double rotate = 0.0)
    {
        body_ += "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" font-size=\"" +
                 std::to_string(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + '"';
        if (rotate != 0.0)
            body_ += " transform=\"rotate(" + px(rotate) + ' ' + px(x) + ' ' + px(y) + ")\"";
        body_ += '>' + s + "</text>\n";
    }

    std::string str() const
    {
        return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
               std::to_string(width_) + "\" height=\"" + std::to_string(height_) +
               "\" viewBox=\"0 0 " + std::to_string(width_) + ' ' + std::to_string(height_) +
               "\" font-family=\"Helvetica, Arial, sans-serif\">\n<rect width=\"100%\" "
               "height=\"100%\" fill=\"#fff\"/>\n" +
               body_ + "</svg>\n";
    }

  private:
    int width_, height_;
    std::string body_;
};

std::string decade_label(int e)
{
    return "10<tspan dy=\"-5\" font-size=\"9\">" + std::to_string(e) + "</tspan>";
}

std::string linear_label(double v, double step)
{
    char buf[32];
    const int decimals = std::max(0, static_cast<int>(std::ceil(-std::log10(step) - 1e-9)));
    std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < step * 1e-6 ? 0.0 : v);
    return buf;
}

void frame(Svg &svg, const Axis &x, const Axis &y, const std::string &xlabel,
           const std::string &ylabel, bool x_ticks_labeled = true)
{
    const double left = x.p0, right = x.p1, bottom = y.p0, top = y.p1;
    svg.rect(left, top, right - left, bottom - top, "none", "#000");

    auto ticks = [&](const Axis &a, bool horizontal, bool labeled) {
        if (a.log)
        {
            for (int e = static_cast<int>(a.lo); e <= static_cast<int>(a.hi); ++e)
            {
                const double p = a.map(std::pow(10.0, e));
                if (horizontal)
                {
                    svg.line(p, bottom, p, bottom - 6, "#000");
                    svg.line(p, top, p, bottom, "#ddd", 0.5);
                    if (labeled)
                        svg.text(p, bottom + 18, decade_label(e));
                }
                else
                {
                    svg.line(left, p, left + 6, p, "#000");
                    svg.line(left, p, right, p, "#ddd", 0.5);
                    svg.text(left - 6, p + 4, decade_label(e), "end");
                }
                if (e < static_cast<int>(a.hi))
                    for (int m = 2; m <= 9; ++m)
                    {
                        const double q = a.map(m * std::pow(10.0, e));
                        if (horizontal)
                            svg.line(q, bottom, q, bottom - 3, "#000", 0.7);
                        else
                            svg.line(left, q, left + 3, q, "#000", 0.7);
                    }
            }
        }
        else
        {
            const double step = nice_step(a.hi - a.lo);
            const int count = static_cast<int>(std::llround((a.hi - a.lo) / step));
            for (int i = 0; i <= count; ++i)
            {
                const double v = a.lo + i * step;
                const double p = a.map(v);
                if (horizontal)
                {
                    svg.line(p, bottom, p, bottom - 6, "#000");
                    if (labeled)
                        svg.text(p, bottom + 16, linear_label(v, step));
                }
                else
                {
                    svg.line(left, p, left + 6, p, "#000");
                    svg.line(left, p, right, p, "#ddd", 0.5);
                    svg.text(left - 6, p + 4, linear_label(v, step), "end");
                }
            }
        }
    };
    ticks(x, true, x_ticks_labeled);
    ticks(y, false, true);
    if (!xlabel.empty())
        svg.text((left + right) / 2, bottom + 38, xlabel, "middle", 13);
    svg.text(left - 52, (top + bottom) / 2, ylabel, "middle", 13, "#000", -90.0);
}

struct Range
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v)
    {
        if (std::isfinite(v))
        {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    bool empty() const { return !(hi >= lo); }
};

std::vector<double> log_grid(double lo, double hi, int n)
{
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i / (n - 1));
    return out;
}

std::string percent(double f)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.0f%%", 100.0 * f);
    return buf;
}

} // namespace

std::string plot_qi_vs_nbar(std::span<const ResonatorOutcome> outcomes)
{
    const int width = 640, height = 460;
    Svg svg(width, height);
    Range xr, yr;
    for (const ResonatorOutcome &o : outcomes)
        if (o.has_series)
            for (const PowerPoint &p : o.series.points)
            {
                if (p.n_bar > 0 && p.q_internal > 0)
                {
                    xr.add(p.n_bar);
                    yr.add(p.q_internal);
                }
            }
    if (xr.empty())
    {
        xr.add(1.0), xr.add(1e6);
        yr.add(1e5), yr.add(1e7);
    }
    const Axis x = log_axis(xr.lo, xr.hi, 80, width - 150);
    const Axis y = log_axis(yr.lo, yr.hi, height - 60, 20);
    frame(svg, x, y, "mean photon number n̄", "internal quality factor Q<tspan dy=\"4\" font-size=\"9\">i</tspan>");

    int k = 0;
    for (const ResonatorOutcome &o : outcomes)
    {
        if (!o.has_series)
            continue;
        const char *color = kPalette[k % kPaletteSize];
        if (o.ok)
        {
            std::vector<std::pair<double, double>> curve;
            for (double n : log_grid(std::pow(10.0, x.lo), std::pow(10.0, x.hi), 120))
            {
                const double qi = 1.0 / tls_model(n, o.tls.q0, o.tls.q_tls, o.tls.n_c);
                if (qi >= std::pow(10.0, y.lo) && qi <= std::pow(10.0, y.hi))
                    curve.emplace_back(x.map(n), y.map(qi));
            }
            svg.polyline(curve, color, 1.2);
        }
        for (const PowerPoint &p : o.series.points)
            if (p.n_bar > 0 && p.q_internal > 0)
                svg.marker(x.map(p.n_bar), y.map(p.q_internal), color, k);
        const double ly = 30 + 18 * k;
        svg.marker(width - 135, ly - 4, color, k);
        svg.text(width - 125, ly, escape(o.resonator_id), "start", 11);
        ++k;
    }
    return svg.str();
}

std::string plot_decomposition(const ResonatorOutcome &o)
{
    const int width = 640, height = 560;
    Svg svg(width, height);
    svg.text(width / 2.0, 16, "loss decomposition: " + escape(o.resonator_id), "middle", 13);

    Range xr, yr, rr;
    if (o.has_series)
        for (const PowerPoint &p : o.series.points)
        {
            xr.add(p.n_bar);
            yr.add(1.0 / p.q_internal);
        }
    if (o.ok)
    {
        yr.add(o.at_zero.background);
        yr.add(o.at_zero.background + o.at_zero.tls);
        if (!xr.empty())
            yr.add(tls_model(xr.hi, o.tls.q0, o.tls.q_tls, o.tls.n_c) - o.at_zero.background);
    }
    if (xr.empty())
    {
        xr.add(1.0), xr.add(1e6);
        yr.add(1e-7), yr.add(1e-6);
    }
    const Axis x = log_axis(xr.lo, xr.hi, 90, width - 30);
    const Axis y = log_axis(std::max(yr.lo, 1e-3 * yr.hi), yr.hi, 330, 30);
    frame(svg, x, y, "", "loss 1/Q<tspan dy=\"4\" font-size=\"9\">i</tspan>", false);

    std::vector<double> res;
    if (o.ok)
    {
        const double ylo = std::pow(10.0, y.lo), yhi = std::pow(10.0, y.hi);
        std::vector<std::pair<double, double>> total, tls, bg;
        for (double n : log_grid(std::pow(10.0, x.lo), std::pow(10.0, x.hi), 120))
        {
            const LossDecomposition d = decompose_loss(o.tls, n);
            if (d.background + d.tls <= yhi)
                total.emplace_back(x.map(n), y.map(d.background + d.tls));
            if (d.tls >= ylo && d.tls <= yhi)
                tls.emplace_back(x.map(n), y.map(d.tls));
            bg.emplace_back(x.map(n), y.map(std::clamp(d.background, ylo, yhi)));
        }
        svg.polyline(total, "#000", 1.6);
        svg.polyline(tls, "#d62728", 1.4, "6 3");
        svg.polyline(bg, "#1f77b4", 1.4, "2 3");
        for (const PowerPoint &p : o.series.points)
        {
            const double meas = 1.0 / p.q_internal;
            const double model = tls_model(p.n_bar, o.tls.q0, o.tls.q_tls, o.tls.n_c);
            res.push_back(100.0 * (meas - model) / meas);
            rr.add(res.back());
        }
        svg.line(width - 200, 48, width - 170, 48, "#000", 1.6);
        svg.text(width - 165, 52, "fit total", "start", 11);
        svg.line(width - 200, 66, width - 170, 66, "#d62728", 1.4, "6 3");
        svg.text(width - 165, 70, "TLS", "start", 11);
        svg.line(width - 200, 84, width - 170, 84, "#1f77b4", 1.4, "2 3");
        svg.text(width - 165, 88, "background 1/Q<tspan dy=\"4\" font-size=\"8\">0</tspan>",
                 "start", 11);
    }
    if (o.has_series)
        for (const PowerPoint &p : o.series.points)
            svg.marker(x.map(p.n_bar), y.map(1.0 / p.q_internal), "#444", 0);

    const double bound = rr.empty() ? 1.0 : std::max({std::abs(rr.lo), std::abs(rr.hi), 0.5});
    Axis xr2 = x;
    const Axis yres = linear_axis(-bound, bound, height - 60, 370);
    xr2.p0 = x.p0;
    frame(svg, xr2, yres, "mean photon number n̄", "residual (%)");
    svg.line(x.p0, yres.map(0.0), x.p1, yres.map(0.0), "#888", 0.8, "4 2");
    if (o.ok)
        for (std::size_t i = 0; i < res.size(); ++i)
            svg.marker(x.map(o.series.points[i].n_bar), yres.map(res[i]), "#444", 1, 3.0);
    return svg.str();
}

std::string plot_loss_fractions(std::span<const ResonatorOutcome> outcomes)
{
    std::vector<const ResonatorOutcome *> ok;
    for (const ResonatorOutcome &o : outcomes)
        if (o.ok)
            ok.push_back(&o);
    const int n = std::max<int>(1, static_cast<int>(ok.size()));
    const int width = std::max(360, 90 + 70 * n + 40), height = 420;
    Svg svg(width, height);
    const Axis x = linear_axis(0, 1, 80, width - 30);
    Axis y;
    y.lo = 0.0, y.hi = 1.0, y.p0 = height - 70, y.p1 = 30;
    svg.rect(x.p0, y.p1, x.p1 - x.p0, y.p0 - y.p1, "none", "#000");
    for (int i = 0; i <= 5; ++i)
    {
        const double p = y.map(i / 5.0);
        svg.line(x.p0, p, x.p0 + 6, p, "#000");
        svg.text(x.p0 - 6, p + 4, percent(i / 5.0), "end");
    }
    svg.text(x.p0 - 50, (y.p0 + y.p1) / 2, "share of low-power loss", "middle", 13, "#000", -90.0);

    const double slot = (x.p1 - x.p0) / n;
    for (std::size_t i = 0; i < ok.size(); ++i)
    {
        const ResonatorOutcome &o = *ok[i];
        const double f_tls = o.tls.frac_tls_lowpower;
        const double bx = x.p0 + slot * (static_cast<double>(i) + 0.2);
        const double bw = slot * 0.6;
        const double y_split = y.map(f_tls);
        svg.rect(bx, y_split, bw, y.p0 - y_split, "#d62728");
        svg.rect(bx, y.p1, bw, y_split - y.p1, "#1f77b4");
        svg.text(bx + bw / 2, (y.p0 + y_split) / 2 + 4, percent(f_tls), "middle", 11, "#fff");
        svg.text(bx + bw / 2, (y_split + y.p1) / 2 + 4, percent(1.0 - f_tls), "middle", 11, "#fff");
        svg.text(bx + bw / 2, y.p0 + 16, escape(o.resonator_id), "middle", 11);
    }
    svg.rect(x.p0, height - 28, 12, 12, "#d62728");
    svg.text(x.p0 + 16, height - 18, "TLS", "start", 11);
    svg.rect(x.p0 + 70, height - 28, 12, 12, "#1f77b4");
    svg.text(x.p0 + 86, height - 18, "background", "start", 11);
    return svg.str();
}

std::string plot_cohort_qtls(std::span<const CohortSummary> cohorts)
{
    const int n = std::max<int>(1, static_cast<int>(cohorts.size()));
    const int width = std::max(360, 100 + 120 * n), height = 420;
    Svg svg(width, height);
    Range yr;
    for (const CohortSummary &c : cohorts)
        for (double v : c.q_tls_values)
            if (v > 0)
                yr.add(v);
    if (yr.empty())
        yr.add(1e5), yr.add(1e7);
    Axis x;
    x.lo = 0.0, x.hi = n, x.p0 = 90, x.p1 = width - 20;
    const Axis y = log_axis(yr.lo, yr.hi, height - 60, 20);
    svg.rect(x.p0, y.p1, x.p1 - x.p0, y.p0 - y.p1, "none", "#000");
    for (int e = static_cast<int>(y.lo); e <= static_cast<int>(y.hi); ++e)
    {
        const double p = y.map(std::pow(10.0, e));
        svg.line(x.p0, p, x.p0 + 6, p, "#000");
        svg.line(x.p0, p, x.p1, p, "#ddd", 0.5);
        svg.text(x.p0 - 6, p + 4, decade_label(e), "end");
    }
    svg.text(x.p0 - 55, (y.p0 + y.p1) / 2, "Q<tspan dy=\"4\" font-size=\"9\">TLS</tspan>",
             "middle", 13, "#000", -90.0);

    for (std::size_t i = 0; i < cohorts.size(); ++i)
    {
        const CohortSummary &c = cohorts[i];
        const char *color = kPalette[i % kPaletteSize];
        const double cx = x.map(static_cast<double>(i) + 0.5);
        const std::size_t m = c.q_tls_values.size();
        for (std::size_t j = 0; j < m; ++j)
        {
            const double jitter = m > 1 ? -18.0 + 36.0 * static_cast<double>(j) / (m - 1) : 0.0;
            if (c.q_tls_values[j] > 0)
                svg.marker(cx + jitter, y.map(c.q_tls_values[j]), color, static_cast<int>(i));
        }
        if (c.mean_q_tls > 0)
            svg.line(cx - 30, y.map(c.mean_q_tls), cx + 30, y.map(c.mean_q_tls), color, 2.0);
        svg.text(cx, y.p0 + 18, escape(c.cohort_label), "middle", 12);
    }
    return svg.str();
}

} // namespace resq::io
