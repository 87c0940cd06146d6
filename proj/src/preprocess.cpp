#include "ppgsleep/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "ppgsleep/error.hpp"
#include "ppgsleep/kernels/kernels.hpp"
#include "ppgsleep/stats.hpp"

namespace ppgsleep {
namespace {

using cplx = std::complex<double>;

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

// Steady-state DF2T states of every section for a unit constant input.
struct SectionState {
    double s1 = 0.0;
    double s2 = 0.0;
};

std::vector<SectionState> unit_step_states(const FilterCoefficients& coeffs) {
    std::vector<SectionState> states;
    states.reserve(coeffs.sections().size());
    double level = coeffs.gain();
    for (const Biquad& q : coeffs.sections()) {
        const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
        states.push_back({level * (dc - q.b0), level * (q.b2 - q.a2 * dc)});
        level *= dc;
    }
    return states;
}

void run_cascade(std::vector<double>& x, const FilterCoefficients& coeffs, std::vector<SectionState> state) {
    const double g = coeffs.gain();
    for (double& v : x) v *= g;
    const auto sections = coeffs.sections();
    for (std::size_t s = 0; s < sections.size(); ++s) {
        const Biquad& q = sections[s];
        double s1 = state[s].s1;
        double s2 = state[s].s2;
        for (double& v : x) {
            const double in = v;
            const double out = q.b0 * in + s1;
            s1 = q.b1 * in - q.a1 * out + s2;
            s2 = q.b2 * in - q.a2 * out;
            v = out;
        }
    }
}

std::vector<SectionState> scaled(const std::vector<SectionState>& unit, double level) {
    std::vector<SectionState> out(unit);
    for (auto& s : out) {
        s.s1 *= level;
        s.s2 *= level;
    }
    return out;
}

bool all_equal(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace

FilterCoefficients design_cheby2_lowpass(int order, double stopband_edge_hz, double stopband_atten_db,
                                         double fs_hz) {
    if (order <= 0 || order % 2 != 0)
        throw DesignError("Chebyshev II order must be positive and even, got " + std::to_string(order));
    if (!(fs_hz > 0.0)) throw DesignError("sampling rate must be positive");
    if (!(stopband_edge_hz > 0.0) || !(stopband_edge_hz < fs_hz / 2.0))
        throw DesignError("stopband edge " + std::to_string(stopband_edge_hz) + " Hz outside (0, " +
                          std::to_string(fs_hz / 2.0) + ") Hz");
    if (!(stopband_atten_db > 0.0)) throw DesignError("stopband attenuation must be positive");

    const double pi = std::numbers::pi;
    const double eps = 1.0 / std::sqrt(std::pow(10.0, stopband_atten_db / 10.0) - 1.0);
    const double mu = std::asinh(1.0 / eps) / order;
    const double edge = 2.0 * fs_hz * std::tan(pi * stopband_edge_hz / fs_hz);

    std::vector<Biquad> sections;
    std::vector<double> radius;
    for (int k = 0; k < order / 2; ++k) {
        const double theta = pi * (2.0 * k + 1.0) / (2.0 * order);
        // Chebyshev I pole, inverted for type II, then scaled to the edge.
        const cplx p1(-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta));
        const cplx pole = edge / p1;
        const cplx zero(0.0, edge / std::cos(theta));

        const cplx pd = bilinear(pole, fs_hz);
        const cplx zd = bilinear(zero, fs_hz);
        Biquad q;
        q.b0 = 1.0;
        q.b1 = -2.0 * zd.real();
        q.b2 = std::norm(zd);
        q.a1 = -2.0 * pd.real();
        q.a2 = std::norm(pd);
        sections.push_back(q);
        radius.push_back(std::abs(pd));
    }

    std::vector<std::size_t> idx(sections.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return radius[a] < radius[b]; });
    std::vector<Biquad> ordered;
    double gain = 1.0;
    for (std::size_t i : idx) {
        const Biquad& q = sections[i];
        gain *= (1.0 + q.a1 + q.a2) / (q.b0 + q.b1 + q.b2);
        ordered.push_back(q);
    }
    return FilterCoefficients(std::move(ordered), gain);
}

std::complex<double> frequency_response(const FilterCoefficients& coeffs, double f_hz, double fs_hz) {
    const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_hz);  // z^-1
    const cplx z2 = z1 * z1;
    cplx h = coeffs.gain();
    for (const Biquad& q : coeffs.sections()) h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
    return h;
}

std::vector<double> filter_forward(std::span<const double> signal, const FilterCoefficients& coeffs) {
    std::vector<double> y(signal.begin(), signal.end());
    run_cascade(y, coeffs, std::vector<SectionState>(coeffs.sections().size()));
    return y;
}

std::vector<double> filter_zero_phase(std::span<const double> signal, const FilterCoefficients& coeffs) {
    const std::size_t pad = 3 * coeffs.order();
    const std::size_t n = signal.size();
    if (n <= pad)
        throw ValidationError("signal of " + std::to_string(n) + " samples too short for zero-phase filtering (need > " +
                              std::to_string(pad) + ")");

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    const double first = signal.front();
    const double last = signal.back();
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * first - signal[i]);
    ext.insert(ext.end(), signal.begin(), signal.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * last - signal[n - 1 - i]);

    const auto unit = unit_step_states(coeffs);
    run_cascade(ext, coeffs, scaled(unit, ext.front()));
    std::reverse(ext.begin(), ext.end());
    run_cascade(ext, coeffs, scaled(unit, ext.front()));
    std::reverse(ext.begin(), ext.end());

    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

namespace {

bool is_integral(double v) { return v == std::floor(v) && v < 1e9; }

}  // namespace

std::size_t resampled_length(std::size_t n, double from_hz, double to_hz) {
    if (n == 0) return 0;
    if (is_integral(from_hz) && is_integral(to_hz)) {
        const auto from = static_cast<std::uint64_t>(from_hz);
        const auto to = static_cast<std::uint64_t>(to_hz);
        return static_cast<std::size_t>((static_cast<std::uint64_t>(n - 1) * to) / from) + 1;
    }
    return static_cast<std::size_t>(std::floor(static_cast<double>(n - 1) * to_hz / from_hz)) + 1;
}

std::vector<double> resample_linear(std::span<const double> signal, double from_hz, double to_hz) {
    if (signal.empty()) throw ValidationError("cannot resample an empty signal");
    if (!(to_hz > 0.0) || !(from_hz > to_hz))
        throw ValidationError("resampling requires from_hz > to_hz > 0");

    const std::size_t n = signal.size();
    const std::size_t m = resampled_length(n, from_hz, to_hz);
    std::vector<double> out(m);

    auto interp = [&](std::size_t i0, double frac) {
        if (i0 + 1 >= n) return signal[n - 1];
        return signal[i0] + frac * (signal[i0 + 1] - signal[i0]);
    };

    if (is_integral(from_hz) && is_integral(to_hz)) {
        // Exact rational positions: j * from / to.
        const auto from = static_cast<std::uint64_t>(from_hz);
        const auto to = static_cast<std::uint64_t>(to_hz);
        for (std::size_t j = 0; j < m; ++j) {
            const std::uint64_t num = static_cast<std::uint64_t>(j) * from;
            out[j] = interp(static_cast<std::size_t>(num / to), static_cast<double>(num % to) / static_cast<double>(to));
        }
    } else {
        const double ratio = from_hz / to_hz;
        for (std::size_t j = 0; j < m; ++j) {
            const double pos = static_cast<double>(j) * ratio;
            const double base = std::floor(pos);
            out[j] = interp(static_cast<std::size_t>(base), pos - base);
        }
    }
    return out;
}

ClipBounds clip_bounds(std::span<const double> signal, double k) {
    const MeanStd ms = mean_std(signal);
    return {ms.mean - k * ms.std, ms.mean + k * ms.std};
}

std::vector<double> clip_to(std::span<const double> signal, ClipBounds bounds) {
    std::vector<double> out(signal.begin(), signal.end());
    kernels::active().clamp(out, bounds.lo, bounds.hi);
    return out;
}

std::vector<double> clip_outliers(std::span<const double> signal, double k) {
    if (signal.empty()) throw ValidationError("cannot clip an empty signal");
    if (all_equal(signal)) return {signal.begin(), signal.end()};
    return clip_to(signal, clip_bounds(signal, k));
}

std::vector<double> zscore(std::span<const double> signal) {
    if (signal.empty()) throw ValidationError("cannot normalize an empty signal");
    std::vector<double> out(signal.begin(), signal.end());
    const MeanStd ms = mean_std(signal);
    if (all_equal(signal) || ms.std == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    kernels::active().standardize(out, ms.mean, ms.std);
    return out;
}

PpgRecord preprocess_record(const PpgRecord& record) {
    const FilterCoefficients lowpass =
        design_cheby2_lowpass(kFilterOrder, kStopbandEdgeHz, kStopbandAttenuationDb, record.fs_hz());
    const auto filtered = filter_zero_phase(record.samples(), lowpass);
    const auto resampled = resample_linear(filtered, record.fs_hz(), kTargetFsHz);
    const auto clipped = clip_outliers(resampled, kClipSigma);
    return PpgRecord(record.subject_id(), kTargetFsHz, zscore(clipped));
}

}  // namespace ppgsleep
