#include "hrt/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "hrt/grid.hpp"

namespace hrt {

namespace {

constexpr double kGuard = 1e-6;

Vec2 rotate(double ang, Vec2 p) {
    const double c = std::cos(ang), s = std::sin(ang);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

}  // namespace

AffineMap2 AffineMap2::inverse() const {
    const double d = det();
    if (std::abs(d) <= 1e-12) fail(ErrorKind::Numerical, "affine map is singular");
    AffineMap2 r;
    r.m = {m[3] / d, -m[1] / d, -m[2] / d, m[0] / d};
    r.shift = {-(r.m[0] * shift.x + r.m[1] * shift.y), -(r.m[2] * shift.x + r.m[3] * shift.y)};
    return r;
}

double closed_form_a(double alpha, double beta) {
    const double s2a = std::sin(2.0 * alpha), sb = std::sin(beta), cb = std::cos(beta);
    return sb / std::sqrt(s2a * sb + cb * (s2a + sb) + 1.0);
}

Vec2 printed_origin(double alpha, double beta, double a) {
    const double q = std::numbers::pi / 4.0;
    return {a * std::sin(alpha + q) * std::tan(beta) / std::sqrt(2.0),
            a * std::cos(alpha + q) * std::tan(beta / 2.0) / std::sqrt(2.0)};
}

std::array<Vec2, 4> data_corners(const SectorGeometry& g) {
    return {Vec2{0.0, 0.0}, Vec2{g.w, 0.0}, Vec2{g.w, g.h}, Vec2{g.cut_slope * g.h, g.h}};
}

SectorGeometry build_geometry_rect(double kappa_min, double kappa_max, double w, double h, double cut_slope) {
    if (!(kappa_min >= 0.0) || !(kappa_max > kappa_min))
        fail(ErrorKind::Config, "empty theta interval: need 0 <= kappa_min < kappa_max");
    if (!(w > 0.0) || !(h > 0.0)) fail(ErrorKind::Config, "data rectangle must have positive sides");
    if (!(cut_slope >= 0.0) || cut_slope * h >= w)
        fail(ErrorKind::Config, "trapezoid not inscribable: mute slope removes the data region");

    SectorGeometry g;
    g.w = w;
    g.h = h;
    g.cut_slope = cut_slope;
    g.gamma = std::atan(cut_slope);
    const double lo = std::atan(kappa_min), hi = std::atan(kappa_max);
    g.beta = hi - lo;
    g.alpha = 0.5 * (hi + lo);

    const Vec2 n_lo{std::sin(g.beta / 2), std::cos(g.beta / 2)};
    const Vec2 n_hi{std::sin(g.beta / 2), -std::cos(g.beta / 2)};
    const std::array<Vec2, 4> rect{Vec2{0, 0}, Vec2{w, 0}, Vec2{w, h}, Vec2{0, h}};
    std::array<Vec2, 4> off;
    for (int i = 0; i < 4; ++i) off[i] = rotate(g.alpha, {rect[i].x - w / 2, rect[i].y - h / 2});

    // One corner on each ray, the farthest corner on the arc.
    double best = -1.0;
    Vec2 best_o;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            const double det = n_lo.x * n_hi.y - n_lo.y * n_hi.x;
            const double b0 = -dot(n_lo, off[i]), b1 = -dot(n_hi, off[j]);
            const Vec2 o{(b0 * n_hi.y - n_lo.y * b1) / det, (n_lo.x * b1 - n_hi.x * b0) / det};
            bool inside = true;
            double rmax = 0.0;
            for (int c = 0; c < 4; ++c) {
                const Vec2 p{o.x + off[c].x, o.y + off[c].y};
                if (dot(n_lo, p) < -1e-12 || dot(n_hi, p) < -1e-12 || p.x <= 0.0) inside = false;
                rmax = std::max(rmax, std::hypot(p.x, p.y));
            }
            if (!inside || !(rmax > 0.0)) continue;
            const double a = 1.0 / rmax;
            if (a > best) {
                best = a;
                best_o = o;
            }
        }
    }
    if (best <= 0.0) fail(ErrorKind::Config, "trapezoid not inscribable in the sector");
    g.a = best;
    g.origin = {best * best_o.x, best * best_o.y};

    const double c = std::cos(g.alpha), s = std::sin(g.alpha);
    g.T.m = {g.a * c, -g.a * s, g.a * s, g.a * c};
    const Vec2 centre = rotate(g.alpha, {w / 2, h / 2});
    g.T.shift = {g.origin.x - g.a * centre.x, g.origin.y - g.a * centre.y};

    double ar = std::numeric_limits<double>::infinity();
    for (const Vec2& cnr : data_corners(g)) {
        const Vec2 p = g.T.apply(cnr);
        for (double th : {-g.beta / 2, g.beta / 2}) ar = std::min(ar, p.x * std::cos(th) + p.y * std::sin(th));
    }
    if (!(ar > 0.0) || !(ar < 1.0)) fail(ErrorKind::Numerical, "inner radius a_r outside (0,1)");
    g.a_r = ar;
    return g;
}

SectorGeometry build_geometry(double q_min, double q_max, double tau_min, double mute_k) {
    if (!(q_min > 0.0) || !(q_max > q_min)) fail(ErrorKind::Config, "need 0 < q_min < q_max");
    if (!(tau_min > 0.0) || !(tau_min < 1.0)) fail(ErrorKind::Config, "need 0 < tau_min < 1");
    const double k = mute_k < 0.0 ? tau_min : mute_k;
    return build_geometry_rect(q_min * q_min, q_max * q_max, 1.0, 1.0, k * k);
}

Vec2 map_T(const SectorGeometry& g, double s, double y) { return g.T.apply({s, y}); }

Vec2 map_T_inverse(const SectorGeometry& g, Vec2 p) { return g.T.inverse().apply(p); }

LineParams map_S(const SectorGeometry& g, double sigma, double kappa) {
    const double theta = g.alpha - std::atan(kappa);
    if (std::abs(theta) >= std::numbers::pi / 2 - kGuard) fail(ErrorKind::Numerical, "tangent blow-up in map_S");
    const Vec2 p0 = map_T(g, sigma, 0.0);
    const double er = p0.x * std::cos(theta) + p0.y * std::sin(theta);
    return {er / std::cos(theta), -std::tan(theta)};
}

LineParams map_S_inverse(const SectorGeometry& g, LineParams mp) {
    const double theta = -std::atan(mp.q2);
    const double kappa = std::tan(g.alpha - theta);
    const double er = mp.tau2 * std::cos(theta);
    const Vec2 base = map_T(g, 0.0, 0.0);
    const double b = base.x * std::cos(theta) + base.y * std::sin(theta);
    const double sigma = (er - b) / (g.a * std::cos(g.alpha - theta));
    return {sigma, kappa};
}

LogPolar map_P1(double u, double v) {
    const double r2 = u * u + v * v;
    if (!(r2 > 0.0)) fail(ErrorKind::Numerical, "log of non-positive radius");
    return {std::atan2(v, u), 0.5 * std::log(r2)};
}

LogPolar map_P2(double tau2, double q2) {
    const double theta = -std::atan(q2);
    const double arg = tau2 * std::cos(theta);
    if (!(arg > 0.0)) fail(ErrorKind::Numerical, "log of non-positive line distance");
    return {theta, std::log(arg)};
}

LogPolar phi_eta_data(const SectorGeometry& g, const SquaredFrame& f, double t, double x) {
    const Vec2 p = map_T(g, f.s(t), f.y(x));
    return map_P1(p.x, p.y);
}

double jacobian_data_over_2x(const SectorGeometry& g, const SquaredFrame& f, double t, double x) {
    const Vec2 p = map_T(g, f.s(t), f.y(x));
    return g.a * g.a * f.cs * f.cy * 2.0 * t / (p.x * p.x + p.y * p.y);
}

double jacobian_data(const SectorGeometry& g, const SquaredFrame& f, double t, double x) {
    return 2.0 * x * jacobian_data_over_2x(g, f, t, x);
}

LogPolar phi_eta_radon(const SectorGeometry& g, const SquaredFrame& f, double tau, double q) {
    const LineParams m = map_S(g, f.sigma(tau), f.kappa(q));
    return map_P2(m.tau2, m.q2);
}

}  // namespace hrt
