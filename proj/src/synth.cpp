#include "hrt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace hrt {

double wavelet_value(Wavelet w, double freq, double t) {
    const double a = std::numbers::pi * freq * t;
    const double a2 = a * a;
    if (w == Wavelet::Ricker) return (1.0 - 2.0 * a2) * std::exp(-a2);
    // derivative of a Gaussian, unit peak
    return -std::sqrt(2.0) * a * std::exp(0.5 - a2);
}

CmpGather synth_gather(const RegularGrid2& grid, const std::vector<EventSpec>& events, double noise_rms,
                       std::uint64_t seed) {
    grid.validate();
    if (!(noise_rms >= 0.0)) fail(ErrorKind::Config, "noise rms must be non-negative");
    const double nyq = 0.5 / grid.d1;
    for (const EventSpec& e : events) {
        if (!(e.tau0 > 0.0)) fail(ErrorKind::Config, "event tau0 must be positive");
        if (e.tau0 > grid.end1()) fail(ErrorKind::Config, "event outside grid");
        if (!(e.q0 >= 0.0)) fail(ErrorKind::Config, "event moveout must be non-negative");
        if (!(e.freq > 0.0) || e.freq >= nyq) fail(ErrorKind::Config, "event frequency must be below Nyquist");
    }
    CmpGather f(grid);
    for (std::size_t k = 0; k < grid.n2; ++k) {
        const double x = grid.x2(k);
        double* tr = f.trace(k);
        for (const EventSpec& e : events) {
            const double t0 = std::sqrt(e.tau0 * e.tau0 + e.q0 * e.q0 * x * x);
            for (std::size_t i = 0; i < grid.n1; ++i) tr[i] += e.amplitude * wavelet_value(e.wavelet, e.freq, grid.x1(i) - t0);
        }
    }
    if (noise_rms > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, noise_rms);
        for (double& v : f.data) v += nd(rng);
    }
    return f;
}

ReferenceCase reference_case(std::size_t n) {
    if (n < 8) fail(ErrorKind::Config, "reference case needs n >= 8");
    const double T = 1.022, X = 1.022;
    ReferenceCase rc;
    rc.gather.n1 = rc.gather.n2 = n;
    rc.gather.o1 = rc.gather.o2 = 0.0;
    rc.gather.d1 = T / static_cast<double>(n - 1);
    rc.gather.d2 = X / static_cast<double>(n - 1);
    rc.radon.n1 = rc.radon.n2 = n;
    rc.radon.o1 = 0.1 * T;
    rc.radon.d1 = 0.9 * T / static_cast<double>(n - 1);
    rc.radon.o2 = 0.05 * T / X;
    rc.radon.d2 = 0.95 * T / X / static_cast<double>(n - 1);
    const double ev[3][3] = {{0.25, 0.35, 1.0}, {0.45, 0.5, -0.7}, {0.65, 0.6, 0.5}};
    for (const auto& e : ev) rc.events.push_back({e[0] * T, e[1] * T / X, e[2], 20.0, Wavelet::Ricker});
    return rc;
}

std::vector<unsigned char> make_mask(const RegularGrid2& grid, const MaskSpec& spec) {
    grid.validate();
    if (!(spec.fraction_missing >= 0.0) || !(spec.fraction_missing < 1.0))
        fail(ErrorKind::Config, "missing fraction must be in [0,1)");
    const std::size_t n = grid.n2;
    const std::size_t dead = std::min(n - 1, static_cast<std::size_t>(std::llround(spec.fraction_missing * static_cast<double>(n))));
    std::vector<unsigned char> live(n, 1);
    if (dead == 0) return live;
    if (spec.pattern == MaskPattern::RandomTraces) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(spec.seed);
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
            std::swap(idx[i], idx[j]);
        }
        for (std::size_t i = 0; i < dead; ++i) live[idx[i]] = 0;
    } else {
        for (std::size_t i = 0; i < dead; ++i)
            live[static_cast<std::size_t>((static_cast<double>(i) + 0.5) * static_cast<double>(n) / static_cast<double>(dead))] = 0;
    }
    return live;
}

}  // namespace hrt
