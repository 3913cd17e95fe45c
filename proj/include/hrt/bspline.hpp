#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hrt {

double bspline3(double u);
// Fourier transform of bspline3 at lattice-normalised frequency w (rad/sample).
double bspline3_hat(double w);
double bspline3_hat(double w1, double w2);
// Largest w in [0, pi] with bspline3_hat(w) >= threshold.
double bspline3_hat_cutoff(double threshold);

// Periodic (theta, rho) lattice; the rho index is the fast one.
struct LatticeSpec {
    double theta0 = 0.0, rho0 = 0.0;
    double dtheta = 1.0, drho = 1.0;
    std::size_t n_theta = 0, n_rho = 0;
    std::size_t pad_theta = 0, pad_rho = 0;

    std::size_t size() const { return n_theta * n_rho; }
    double theta(std::size_t i) const { return theta0 + static_cast<double>(i) * dtheta; }
    double rho(std::size_t j) const { return rho0 + static_cast<double>(j) * drho; }
};

// Rectangle of retained frequencies: |w_theta| <= wmax_theta, |w_rho| <= wmax_rho (rad/sample).
struct SpectralWindow {
    double threshold = 0.1;
    double wmax_theta = 0.0;
    double wmax_rho = 0.0;

    bool keeps(double w_theta, double w_rho) const;
};

SpectralWindow make_window(double threshold);

struct Sample {
    double theta, rho, weight;
};

// Separable 4x4 stencils for a set of points, reusable for smearing and interpolation.
class Stencil {
public:
    Stencil() = default;
    Stencil(const LatticeSpec& lat, const std::vector<double>& theta, const std::vector<double>& rho);

    std::size_t size() const { return base_.size(); }
    // Out-of-range points have no stencil and contribute nothing.
    bool active(std::size_t k) const { return base_[k] != kInactive; }

    void smear(const double* weights, double* field) const;
    void interpolate(const double* field, double* values) const;

private:
    static constexpr std::uint32_t kInactive = 0xffffffffu;
    std::size_t n_rho_ = 0;
    std::vector<std::uint32_t> base_;
    std::vector<double> frac_;  // (theta, rho) fractional offsets per point
};

std::vector<double> smear_to_lattice(const std::vector<Sample>& samples, const LatticeSpec& lat);
std::vector<double> interpolate_from_lattice(const std::vector<double>& field, const LatticeSpec& lat,
                                             const std::vector<double>& theta, const std::vector<double>& rho);

}  // namespace hrt
