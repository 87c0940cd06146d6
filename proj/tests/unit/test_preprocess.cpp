#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ppgsleep/error.hpp"
#include "ppgsleep/preprocess.hpp"
#include "ppgsleep/random.hpp"

using namespace ppgsleep;
using cd = std::complex<double>;

namespace {

// Iterative radix-2 FFT; the oracle for the filter's frequency response.
void fft(std::vector<cd>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cd w = std::polar(1.0, ang * static_cast<double>(k));
                const cd u = a[i + k], v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

double db(double mag) { return 20.0 * std::log10(mag); }

std::vector<double> sine(double f, double fs, double seconds, double amp = 1.0) {
    std::vector<double> x(static_cast<std::size_t>(seconds * fs));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
    return x;
}

double central_peak(const std::vector<double>& x) {
    double m = 0.0;
    for (std::size_t i = x.size() / 4; i < 3 * x.size() / 4; ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

}  // namespace

TEST_CASE("Chebyshev II design: four stable sections") {
    const auto c = design_cheby2_lowpass();
    CHECK(c.sections().size() == 4);
    CHECK(c.order() == 8);
    for (const Biquad& s : c.sections()) {
        // Roots of z^2 + a1 z + a2.
        const cd disc = std::sqrt(cd(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
        const cd p1 = (-s.a1 + disc) / 2.0, p2 = (-s.a1 - disc) / 2.0;
        CHECK(std::abs(p1) < 1.0);
        CHECK(std::abs(p2) < 1.0);
    }
    CHECK(std::abs(db(std::abs(frequency_response(c, 0.0, 256.0)))) < 0.1);
}

TEST_CASE("Chebyshev II design matches a 2^16-point DFT of its impulse response") {
    const auto c = design_cheby2_lowpass();
    constexpr std::size_t n = 1u << 16;
    std::vector<double> impulse(n, 0.0);
    impulse[0] = 1.0;
    const auto h = filter_forward(impulse, c);
    CHECK(std::abs(h[n - 1]) < 1e-14);  // fully decayed, so the DFT is the response

    std::vector<cd> spectrum(h.begin(), h.end());
    fft(spectrum);
    const double df = 256.0 / static_cast<double>(n);
    CHECK(std::abs(db(std::abs(spectrum[0]))) < 0.1);

    double worst_stop = -1e9, worst_mismatch = 0.0;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) * df;
        const double mag = std::abs(spectrum[k]);
        if (f >= 8.0) worst_stop = std::max(worst_stop, db(mag));
        worst_mismatch = std::max(worst_mismatch, std::abs(spectrum[k] - frequency_response(c, f, 256.0)));
    }
    CHECK(worst_stop <= -39.5);
    CHECK(worst_mismatch < 1e-9);
    // Equiripple stopband: the edge itself sits at the design attenuation.
    CHECK(db(std::abs(frequency_response(c, 8.0, 256.0))) == doctest::Approx(-40.0).epsilon(1e-6));
}

TEST_CASE("filter design rejects impossible parameters") {
    CHECK_THROWS_AS(design_cheby2_lowpass(8, 128.0, 40.0, 256.0), DesignError);
    CHECK_THROWS_AS(design_cheby2_lowpass(8, 200.0, 40.0, 256.0), DesignError);
    CHECK_THROWS_AS(design_cheby2_lowpass(7, 8.0, 40.0, 256.0), DesignError);
    CHECK_THROWS_AS(design_cheby2_lowpass(8, 8.0, 0.0, 256.0), DesignError);
    CHECK_NOTHROW(design_cheby2_lowpass(4, 2.0, 30.0, 34.0));
}

TEST_CASE("zero-phase filtering: DC, passband sine and stopband sine") {
    const auto c = design_cheby2_lowpass();
    for (double level : {1.0, -3.5, 1e4}) {
        const std::vector<double> x(2000, level);
        const auto y = filter_zero_phase(x, c);
        REQUIRE(y.size() == x.size());
        double worst = 0.0;
        for (double v : y) worst = std::max(worst, std::abs(v - level));
        CHECK(worst <= 1e-6 * std::abs(level));
    }

    const auto x1 = sine(1.0, 256.0, 60.0);
    const auto y1 = filter_zero_phase(x1, c);
    const double h1 = std::norm(frequency_response(c, 1.0, 256.0));  // |H|^2
    CHECK(central_peak(y1) == doctest::Approx(1.0).epsilon(0.01));
    // Zero phase: the output is the input scaled by |H|^2, sample by sample.
    double worst = 0.0;
    for (std::size_t i = x1.size() / 4; i < 3 * x1.size() / 4; ++i) worst = std::max(worst, std::abs(y1[i] - h1 * x1[i]));
    CHECK(worst < 1e-6);

    const auto y12 = filter_zero_phase(sine(12.0, 256.0, 60.0), c);
    CHECK(central_peak(y12) <= std::pow(10.0, -80.0 / 20.0) * 2.0);

    CHECK_THROWS_AS(filter_zero_phase(std::vector<double>(24, 1.0), c), ValidationError);
    CHECK_NOTHROW(filter_zero_phase(std::vector<double>(25, 1.0), c));
}

TEST_CASE("resampling lengths and affine exactness") {
    CHECK(resampled_length(7680, 256.0, 34.0) == 1020);
    // Direct index arithmetic: the last output time 1019/34 s must not pass the
    // last input time 7679/256 s, and 1020/34 s must.
    CHECK(1019.0 / 34.0 <= 7679.0 / 256.0);
    CHECK(1020.0 / 34.0 > 7679.0 / 256.0);

    std::vector<double> ramp(7680);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.75 - 2.5 * static_cast<double>(i) / 256.0;
    const auto r = resample_linear(ramp, 256.0, 34.0);
    REQUIRE(r.size() == 1020);
    double worst = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) worst = std::max(worst, std::abs(r[j] - (0.75 - 2.5 * static_cast<double>(j) / 34.0)));
    CHECK(worst <= 1e-12);

    const auto flat = resample_linear(std::vector<double>(7680, 4.25), 256.0, 34.0);
    CHECK(std::all_of(flat.begin(), flat.end(), [](double v) { return v == 4.25; }));

    CHECK_THROWS_AS(resample_linear(std::vector<double>{}, 256.0, 34.0), ValidationError);
    CHECK_THROWS_AS(resample_linear(std::vector<double>(10, 1.0), 34.0, 256.0), ValidationError);
}

TEST_CASE("resampled duration stays within one output period of the input") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(20000);
        const double from = 256.0, to = trial % 2 ? 34.0 : 25.0 + static_cast<double>(rng.below(100));
        const std::size_t m = resampled_length(n, from, to);
        CHECK(std::abs(static_cast<double>(m) / to - static_cast<double>(n) / from) < 1.0 / to);
    }
}

TEST_CASE("clip_outliers: identity, spike oracle, constant, idempotence") {
    const std::vector<double> calm{1.0, -1.0, 1.0, -1.0, 0.5};
    CHECK(clip_outliers(calm) == calm);

    std::vector<double> spike(1000, 0.0);
    spike.back() = 1000.0;
    const double mu = 1000.0 / 1000.0;
    const double sigma = std::sqrt((999.0 * mu * mu + (1000.0 - mu) * (1000.0 - mu)) / 1000.0);
    const auto clipped = clip_outliers(spike);
    CHECK(clipped.back() == doctest::Approx(mu + 3.0 * sigma).epsilon(1e-12));
    CHECK(std::all_of(clipped.begin(), clipped.end() - 1, [](double v) { return v == 0.0; }));

    const std::vector<double> constant(50, 2.0);
    CHECK(clip_outliers(constant) == constant);

    Rng rng(2);
    std::vector<double> x(5000);
    for (auto& v : x) v = rng.normal() * (rng.bernoulli(0.01) ? 20.0 : 1.0);
    const auto b = clip_bounds(x);
    const auto once = clip_to(x, b);
    CHECK(clip_to(once, b) == once);
    CHECK(once == clip_outliers(x));
}

TEST_CASE("zscore oracle and properties") {
    const auto z = zscore(std::vector<double>{1.0, 2.0, 3.0});
    CHECK(z[0] == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-14));
    CHECK(z[1] == 0.0);
    CHECK(z[2] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-14));
    CHECK(zscore(std::vector<double>{5.0, 5.0, 5.0}) == std::vector<double>{0.0, 0.0, 0.0});

    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(2 + rng.below(3000));
        for (auto& v : x) v = rng.normal(rng.uniform(-100, 100), rng.uniform(0.01, 50));
        const auto y = zscore(x);
        double s = 0.0, ss = 0.0;
        for (double v : y) s += v;
        const double mean = s / static_cast<double>(y.size());
        for (double v : y) ss += (v - mean) * (v - mean);
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(std::sqrt(ss / static_cast<double>(y.size())) - 1.0) < 1e-9);
    }
}

TEST_CASE("preprocess_record runs filter, resample, clip, z-score in that order") {
    // Pulse-like signal with a 5x artifact.
    std::vector<double> raw(3 * 7680);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double t = static_cast<double>(i) / 256.0;
        raw[i] = std::sin(2.0 * std::numbers::pi * 1.1 * t) + 0.3 * std::sin(2.0 * std::numbers::pi * 2.2 * t);
    }
    for (std::size_t i = 10000; i < 10200; ++i) raw[i] *= 5.0;
    const PpgRecord rec("s", 256.0, raw);
    const PpgRecord out = preprocess_record(rec);
    CHECK(out.fs_hz() == 34.0);
    REQUIRE(out.samples().size() == resampled_length(raw.size(), 256.0, 34.0));

    const auto filtered = filter_zero_phase(raw, design_cheby2_lowpass());
    const auto resampled = resample_linear(filtered, 256.0, 34.0);
    const auto bounds = clip_bounds(resampled);
    const auto expected = zscore(clip_to(resampled, bounds));
    CHECK(std::equal(expected.begin(), expected.end(), out.samples().begin()));

    // The artifact is held at the upper clip bound.
    const auto clipped = clip_to(resampled, bounds);
    double mean = 0.0, ss = 0.0;
    for (double v : clipped) mean += v;
    mean /= static_cast<double>(clipped.size());
    for (double v : clipped) ss += (v - mean) * (v - mean);
    const double bound = (bounds.hi - mean) / std::sqrt(ss / static_cast<double>(clipped.size()));
    const double peak = *std::max_element(out.samples().begin(), out.samples().end());
    CHECK(peak <= bound + 1e-12);
    CHECK(peak < 4.0);

    CHECK_THROWS_AS(PpgRecord("s", 256.0, std::vector<double>(7000, 0.0)), ValidationError);
}
