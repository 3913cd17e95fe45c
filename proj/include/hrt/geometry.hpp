#pragma once

#include <array>

namespace hrt {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

struct LogPolar {
    double theta = 0.0;
    double rho = 0.0;
};

struct AffineMap2 {
    std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};  // row major
    Vec2 shift;

    Vec2 apply(Vec2 p) const { return {m[0] * p.x + m[1] * p.y + shift.x, m[2] * p.x + m[3] * p.y + shift.y}; }
    double det() const { return m[0] * m[3] - m[1] * m[2]; }
    AffineMap2 inverse() const;
};

// Placement of the data rectangle [0,w]x[0,h] (squared time s, squared offset y)
// inside the unit-radius sector of opening beta centred on the positive u axis.
struct SectorGeometry {
    double beta = 0.0;
    double alpha = 0.0;
    double a = 0.0;
    Vec2 origin;
    double a_r = 0.0;
    double gamma = 0.0;
    double cut_slope = 0.0;  // k^2: data region is s >= k^2 y
    double w = 1.0, h = 1.0;
    AffineMap2 T;
};

// Unit square with kappa = q^2; mute slope k < 0 selects the default tau_min.
SectorGeometry build_geometry(double q_min, double q_max, double tau_min, double mute_k = -1.0);
SectorGeometry build_geometry_rect(double kappa_min, double kappa_max, double w, double h, double cut_slope = 0.0);

// Paper's printed closed forms, kept for comparison with the construction.
double closed_form_a(double alpha, double beta);
Vec2 printed_origin(double alpha, double beta, double a);

// Corners of the data region (clipped by the mute line) in (s, y).
std::array<Vec2, 4> data_corners(const SectorGeometry& g);

Vec2 map_T(const SectorGeometry& g, double s, double y);
Vec2 map_T_inverse(const SectorGeometry& g, Vec2 p);

// Line s = sigma + kappa y  ->  line u = tau2 + q2 v in the placed frame.
struct LineParams {
    double tau2 = 0.0;
    double q2 = 0.0;
};
LineParams map_S(const SectorGeometry& g, double sigma, double kappa);
LineParams map_S_inverse(const SectorGeometry& g, LineParams m);  // returns (sigma, kappa)

LogPolar map_P1(double u, double v);
LogPolar map_P2(double tau2, double q2);

// (t, x) or (tau, q) -> rectangle coordinates: s = cs (t^2 - t0^2), y = cy x^2.
struct SquaredFrame {
    double t0 = 0.0;
    double cs = 1.0;
    double cy = 1.0;

    double s(double t) const { return cs * (t * t - t0 * t0); }
    double y(double x) const { return cy * x * x; }
    double sigma(double tau) const { return cs * (tau * tau - t0 * t0); }
    double kappa(double q) const { return cs * q * q / cy; }
};

LogPolar phi_eta_data(const SectorGeometry& g, const SquaredFrame& f, double t, double x);
double jacobian_data(const SectorGeometry& g, const SquaredFrame& f, double t, double x);
double jacobian_data_over_2x(const SectorGeometry& g, const SquaredFrame& f, double t, double x);
LogPolar phi_eta_radon(const SectorGeometry& g, const SquaredFrame& f, double tau, double q);

}  // namespace hrt
