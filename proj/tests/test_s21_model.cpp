#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resq/core.hpp"
#include "resq/errors.hpp"
#include "resq/s21_model.hpp"

#include <cmath>

using namespace resq;

namespace
{
const ResonanceParams kRes{5.5e9, 9.5e4, 1.0e5, 0.0};
const BackgroundParams kUnit{0.0, 0.0, 0.0, 0.0, 5.5e9};
} // namespace

TEST_CASE("lineshape identities")
{
    const Complex at_fr = eval_s21(kRes, kUnit, kRes.f_r);
    CHECK(at_fr.real() == doctest::Approx(1.0 - 0.95).epsilon(1e-12));
    CHECK(std::abs(at_fr.imag()) < 1e-15);

    const Complex far = eval_s21(kRes, kUnit, 1e15);
    CHECK(std::abs(far - Complex(1.0, 0.0)) < 1e-4);

    const double f_half = kRes.f_r * (1.0 + 1.0 / (2.0 * kRes.q_loaded));
    const Complex expected = 1.0 - 0.95 / Complex(1.0, 1.0);
    // detuning is formed from f - f_r, so relative rounding is amplified by Q_l
    CHECK(std::abs(eval_s21(kRes, kUnit, f_half) - expected) < 1e-9);
}

TEST_CASE("background multiplies the resonance")
{
    const BackgroundParams bg{-3.0, 2e-7, 0.4, 40e-9, 5.5e9};
    for (double f = 5.4995e9; f < 5.5005e9; f += 1.7e4)
    {
        const Complex lhs = eval_s21(kRes, bg, f);
        const Complex rhs = eval_resonance(kRes, f) * bg.at(f);
        CHECK(std::abs(lhs - rhs) <= 1e-15 * std::abs(rhs));
        const double mag_db = -3.0 + 2e-7 * (f - 5.5e9);
        CHECK(std::abs(bg.at(f)) == doctest::Approx(std::pow(10.0, mag_db / 20.0)).epsilon(1e-13));
    }
}

TEST_CASE("synthetic sweeps")
{
    const SweepWindow w = centered_window(kRes.f_r, kRes.q_loaded);
    const ComplexSweep clean = synthesize_sweep(kRes, kUnit, w, 0.0, 1);
    REQUIRE(clean.size() == 201);
    for (std::size_t i = 0; i < clean.size(); ++i)
        CHECK(clean.s21[i] == eval_s21(kRes, kUnit, clean.freqs[i]));
    CHECK(clean.metadata.count("warning") == 0);

    const ComplexSweep a = synthesize_sweep(kRes, kUnit, w, 1e-3, 99);
    const ComplexSweep b = synthesize_sweep(kRes, kUnit, w, 1e-3, 99);
    CHECK(a.s21 == b.s21);
    CHECK(a.freqs == b.freqs);
    const ComplexSweep c = synthesize_sweep(kRes, kUnit, w, 1e-3, 100);
    CHECK(a.s21 != c.s21);

    const ComplexSweep off = synthesize_sweep(kRes, kUnit, {5.6e9, 5.7e9, 64}, 0.0, 1);
    CHECK(off.metadata.at("warning") == "WindowMismatch");
}

TEST_CASE("noise level matches sigma")
{
    const SweepWindow w{5.49e9, 5.51e9, 10000};
    const ComplexSweep clean = synthesize_sweep(kRes, kUnit, w, 0.0, 5);
    const ComplexSweep noisy = synthesize_sweep(kRes, kUnit, w, 1e-3, 5);
    double sr = 0, si = 0, mr = 0, mi = 0;
    const double n = static_cast<double>(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i)
    {
        const Complex d = noisy.s21[i] - clean.s21[i];
        mr += d.real() / n;
        mi += d.imag() / n;
    }
    for (std::size_t i = 0; i < clean.size(); ++i)
    {
        const Complex d = noisy.s21[i] - clean.s21[i];
        sr += (d.real() - mr) * (d.real() - mr) / (n - 1);
        si += (d.imag() - mi) * (d.imag() - mi) / (n - 1);
    }
    CHECK(std::sqrt(sr) == doctest::Approx(1e-3).epsilon(0.05));
    CHECK(std::sqrt(si) == doctest::Approx(1e-3).epsilon(0.05));
}

TEST_CASE("ideal circle")
{
    const Circle full = ideal_circle({5e9, 1e5, 1e5, 0.0});
    CHECK(std::abs(full.center - Complex(0.5, 0.0)) < 1e-15);
    CHECK(full.radius == doctest::Approx(0.5));

    const Circle c9 = ideal_circle({5e9, 9e4, 1e5, 0.0});
    CHECK(std::abs(c9.center - Complex(0.55, 0.0)) < 1e-15);
    CHECK(c9.radius == doctest::Approx(0.45));

    const ResonanceParams rot{5e9, 9e4, 1e5, kPi / 2};
    const Circle cr = ideal_circle(rot);
    CHECK(std::abs(cr.center - Complex(1.0, -0.45)) < 1e-15);

    for (const ResonanceParams &p : {ResonanceParams{5e9, 9e4, 1e5, 0.0}, rot,
                                     ResonanceParams{6e9, 3e4, 1e5, -0.3}})
    {
        const Circle c = ideal_circle(p);
        double spread = 0.0;
        for (int i = 0; i < 1000; ++i)
        {
            const double f = p.f_r * (1.0 + (i - 500) * 2e-3 / p.q_loaded);
            spread = std::max(spread, std::abs(std::abs(eval_resonance(p, f) - c.center) - c.radius));
        }
        CHECK(spread < 1e-12);
    }
}

TEST_CASE("phase winds monotonically through resonance")
{
    for (double theta : {-0.3, 0.0, 0.3})
    {
        const ResonanceParams p{5e9, 5e4, 1e5, theta};
        const Circle c = ideal_circle(p);
        double prev = 0.0;
        double unwrapped = 0.0;
        for (int i = 0; i <= 4000; ++i)
        {
            const double f = p.f_r * (1.0 + (i - 2000) * 1e-2 / p.q_loaded);
            const double a = std::arg(eval_resonance(p, f) - c.center);
            if (i > 0)
            {
                const double step = wrap_phase(a - prev);
                CHECK(step < 0.0);
                unwrapped += step;
            }
            prev = a;
        }
        CHECK(unwrapped > -2 * kPi);
        CHECK(unwrapped < -1.8 * kPi);
    }
}

TEST_CASE("sweep validation")
{
    ComplexSweep s;
    for (int i = 0; i < 40; ++i)
    {
        s.freqs.push_back(5e9 + i);
        s.s21.emplace_back(1.0, 0.0);
    }
    CHECK_NOTHROW(s.validate());
    ComplexSweep short_sweep = s;
    short_sweep.freqs.resize(31);
    short_sweep.s21.resize(31);
    CHECK_THROWS_AS(short_sweep.validate(), Error);
    ComplexSweep bad = s;
    bad.freqs[10] = bad.freqs[9];
    CHECK_THROWS_AS(bad.validate(), Error);
    ComplexSweep nan = s;
    nan.s21[3] = Complex(std::nan(""), 0.0);
    CHECK_THROWS_AS(nan.validate(), Error);
}
