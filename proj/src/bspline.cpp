#include "hrt/bspline.hpp"

#include <cmath>
#include <numbers>

#include "hrt/grid.hpp"

namespace hrt {

double bspline3(double u) {
    const double a = std::abs(u);
    if (a < 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
    if (a < 2.0) {
        const double b = 2.0 - a;
        return b * b * b / 6.0;
    }
    return 0.0;
}

double bspline3_hat(double w) {
    const double h = 0.5 * w;
    if (std::abs(h) < 1e-8) return 1.0;
    const double s = std::sin(h) / h;
    return s * s * s * s;
}

double bspline3_hat(double w1, double w2) { return bspline3_hat(w1) * bspline3_hat(w2); }

double bspline3_hat_cutoff(double threshold) {
    if (!(threshold > 0.0) || !(threshold <= 1.0)) fail(ErrorKind::Config, "window threshold must be in (0,1]");
    double lo = 0.0, hi = 2.0 * std::numbers::pi - 1e-9;
    if (bspline3_hat(hi) >= threshold) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bspline3_hat(mid) >= threshold ? lo : hi) = mid;
    }
    return lo;
}

bool SpectralWindow::keeps(double w_theta, double w_rho) const {
    return std::abs(w_theta) <= wmax_theta && std::abs(w_rho) <= wmax_rho;
}

SpectralWindow make_window(double threshold) {
    SpectralWindow w;
    w.threshold = threshold;
    w.wmax_theta = w.wmax_rho = bspline3_hat_cutoff(std::sqrt(threshold));
    return w;
}

namespace {

inline void weights4(double fr, double* w) {
    const double f2 = fr * fr, f3 = f2 * fr, g = 1.0 - fr;
    w[0] = g * g * g / 6.0;
    w[1] = (3.0 * f3 - 6.0 * f2 + 4.0) / 6.0;
    w[2] = (-3.0 * f3 + 3.0 * f2 + 3.0 * fr + 1.0) / 6.0;
    w[3] = f3 / 6.0;
}

inline long locate(double x, double x0, double dx, std::size_t n, double& fr) {
    const double u = (x - x0) / dx;
    const double fl = std::floor(u);
    const long i = static_cast<long>(fl) - 1;
    if (!(u >= 0.0) || i < 0 || i + 3 >= static_cast<long>(n)) return -1;
    fr = u - fl;
    return i;
}

}  // namespace

Stencil::Stencil(const LatticeSpec& lat, const std::vector<double>& theta, const std::vector<double>& rho)
    : n_rho_(lat.n_rho), base_(theta.size()), frac_(2 * theta.size(), 0.0) {
    if (theta.size() != rho.size()) fail(ErrorKind::Config, "stencil coordinate size mismatch");
    if (lat.size() >= kInactive) fail(ErrorKind::Config, "lattice too large for 32-bit indexing");
    for (std::size_t k = 0; k < theta.size(); ++k) {
        if (std::isnan(theta[k]) || std::isnan(rho[k])) {
            base_[k] = kInactive;
            continue;
        }
        const long i = locate(theta[k], lat.theta0, lat.dtheta, lat.n_theta, frac_[2 * k]);
        const long j = locate(rho[k], lat.rho0, lat.drho, lat.n_rho, frac_[2 * k + 1]);
        if (i < 0 || j < 0) fail(ErrorKind::Numerical, "sample outside padded lattice");
        base_[k] = static_cast<std::uint32_t>(static_cast<std::size_t>(i) * lat.n_rho + static_cast<std::size_t>(j));
    }
}

void Stencil::smear(const double* weights, double* field) const {
    double wt[4], wr[4];
    for (std::size_t k = 0; k < base_.size(); ++k) {
        if (base_[k] == kInactive) continue;
        const double v = weights[k];
        if (v == 0.0) continue;
        weights4(frac_[2 * k], wt);
        weights4(frac_[2 * k + 1], wr);
        double* f = field + base_[k];
        for (int a = 0; a < 4; ++a, f += n_rho_) {
            const double va = v * wt[a];
            f[0] += va * wr[0];
            f[1] += va * wr[1];
            f[2] += va * wr[2];
            f[3] += va * wr[3];
        }
    }
}

void Stencil::interpolate(const double* field, double* values) const {
    double wt[4], wr[4];
    for (std::size_t k = 0; k < base_.size(); ++k) {
        if (base_[k] == kInactive) {
            values[k] = 0.0;
            continue;
        }
        weights4(frac_[2 * k], wt);
        weights4(frac_[2 * k + 1], wr);
        const double* f = field + base_[k];
        double acc = 0.0;
        for (int a = 0; a < 4; ++a, f += n_rho_)
            acc += wt[a] * (wr[0] * f[0] + wr[1] * f[1] + wr[2] * f[2] + wr[3] * f[3]);
        values[k] = acc;
    }
}

std::vector<double> smear_to_lattice(const std::vector<Sample>& samples, const LatticeSpec& lat) {
    std::vector<double> th(samples.size()), rh(samples.size()), w(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        th[k] = samples[k].theta;
        rh[k] = samples[k].rho;
        w[k] = samples[k].weight;
    }
    std::vector<double> field(lat.size(), 0.0);
    Stencil(lat, th, rh).smear(w.data(), field.data());
    return field;
}

std::vector<double> interpolate_from_lattice(const std::vector<double>& field, const LatticeSpec& lat,
                                             const std::vector<double>& theta, const std::vector<double>& rho) {
    if (field.size() != lat.size()) fail(ErrorKind::Config, "field does not match lattice");
    std::vector<double> out(theta.size());
    Stencil(lat, theta, rho).interpolate(field.data(), out.data());
    return out;
}

}  // namespace hrt
